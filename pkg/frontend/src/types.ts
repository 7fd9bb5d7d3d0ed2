export type Bloom =
  | 'non'
  | 'remember'
  | 'understand'
  | 'apply'
  | 'analyze'
  | 'evaluate'
  | 'create'

export const BLOOM_LEVELS: { value: Bloom; label: string; hint: string }[] = [
  { value: 'non', label: 'Non', hint: 'No identifiable cognitive level' },
  { value: 'remember', label: 'Remember', hint: 'Recall facts stated in the video' },
  { value: 'understand', label: 'Understand', hint: 'Explain ideas or concepts in own words' },
  { value: 'apply', label: 'Apply', hint: 'Use the information in a new situation' },
  { value: 'analyze', label: 'Analyze', hint: 'Draw connections, compare, break apart' },
  { value: 'evaluate', label: 'Evaluate', hint: 'Justify a judgment or critique' },
  { value: 'create', label: 'Create', hint: 'Produce something new from the material' },
]

export interface BatchItemView {
  item_id: string
  video_id: string
  source: string
  model: string
  mode: number
  iteration: number
  question: string
  transcript_excerpt: string
  progress: Record<string, number>
}

/** Exact POST body of /api/annotations; the UI must not add or drop fields. */
export interface AnnotationPayload {
  rater_id: string
  item_id: string
  relevance: boolean
  answerability: boolean
  bloom: Bloom
}

export interface StoredAnnotation extends AnnotationPayload {
  timestamp: string
}

export type AlphaValue = number | 'degenerate'

export interface AgreementReport {
  relevance: AlphaValue
  answerability: AlphaValue
  bloom: AlphaValue
}
