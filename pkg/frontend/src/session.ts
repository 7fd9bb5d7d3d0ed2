import type { AnnotationPayload, BatchItemView, Bloom, StoredAnnotation } from './types'

export interface Draft {
  relevance: boolean
  answerability: boolean
  bloom: Bloom
}

export const DEFAULT_DRAFT: Draft = {
  relevance: false,
  answerability: false,
  bloom: 'non',
}

/**
 * One rater stepping through a batch. Keeps the cursor inside batch
 * bounds, tracks which items are completed (always a subset of the batch),
 * and holds per-item drafts so a failed submission loses nothing.
 */
export class RaterSession {
  readonly raterId: string
  private readonly items: BatchItemView[]
  private cursorIndex = 0
  private readonly completedIds = new Set<string>()
  private readonly drafts = new Map<string, Draft>()

  constructor(raterId: string, items: BatchItemView[]) {
    if (!raterId) throw new Error('rater id must be non-empty')
    this.raterId = raterId
    this.items = [...items]
  }

  get size(): number {
    return this.items.length
  }

  get cursor(): number {
    return this.cursorIndex
  }

  get progress(): number {
    return this.completedIds.size
  }

  get completed(): ReadonlySet<string> {
    return this.completedIds
  }

  current(): BatchItemView {
    if (!this.items.length) throw new Error('empty batch')
    return this.items[this.cursorIndex]
  }

  isDone(): boolean {
    return this.items.length > 0 && this.completedIds.size === this.items.length
  }

  goTo(index: number): void {
    if (index < 0 || index >= this.items.length) {
      throw new Error(`cursor ${index} out of bounds [0, ${this.items.length})`)
    }
    this.cursorIndex = index
  }

  next(): void {
    if (this.cursorIndex + 1 < this.items.length) this.cursorIndex += 1
  }

  prev(): void {
    if (this.cursorIndex > 0) this.cursorIndex -= 1
  }

  draftFor(itemId: string): Draft {
    return this.drafts.get(itemId) ?? { ...DEFAULT_DRAFT }
  }

  setDraft(itemId: string, patch: Partial<Draft>): Draft {
    const merged = { ...this.draftFor(itemId), ...patch }
    this.drafts.set(itemId, merged)
    return merged
  }

  /**
   * The exact POST body for the current draft of an item: the form state
   * plus identity, nothing else.
   */
  payloadFor(itemId: string): AnnotationPayload {
    this.assertInBatch(itemId)
    const draft = this.draftFor(itemId)
    return {
      rater_id: this.raterId,
      item_id: itemId,
      relevance: draft.relevance,
      answerability: draft.answerability,
      bloom: draft.bloom,
    }
  }

  /** Record a server-acknowledged submission and advance to the next
   * incomplete item (cursor stays put when everything is done). */
  markCompleted(itemId: string): void {
    this.assertInBatch(itemId)
    this.completedIds.add(itemId)
    const start = this.cursorIndex
    for (let step = 0; step < this.items.length; step++) {
      const idx = (start + step) % this.items.length
      if (!this.completedIds.has(this.items[idx].item_id)) {
        this.cursorIndex = idx
        return
      }
    }
  }

  /** Seed completion state and drafts from previously stored annotations
   * (revisiting a completed item shows the stored values). */
  prefill(stored: StoredAnnotation[]): void {
    const ids = new Set(this.items.map((i) => i.item_id))
    for (const record of stored) {
      if (record.rater_id !== this.raterId || !ids.has(record.item_id)) continue
      this.completedIds.add(record.item_id)
      this.drafts.set(record.item_id, {
        relevance: record.relevance,
        answerability: record.answerability,
        bloom: record.bloom,
      })
    }
    const firstOpen = this.items.findIndex((i) => !this.completedIds.has(i.item_id))
    this.cursorIndex = firstOpen === -1 ? 0 : firstOpen
  }

  private assertInBatch(itemId: string): void {
    if (!this.items.some((i) => i.item_id === itemId)) {
      throw new Error(`item ${itemId} is not part of this batch`)
    }
  }
}
