import type {
  AgreementReport,
  AnnotationPayload,
  BatchItemView,
  StoredAnnotation,
} from './types'

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/** Thin typed client over the annotation service REST endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`)
    if (!resp.ok) throw new ApiError(resp.status, `GET ${path} -> ${resp.status}`)
    return resp.json() as Promise<T>
  }

  async getBatch(): Promise<BatchItemView[]> {
    const doc = await this.getJson<{ items: BatchItemView[] }>('/api/batch')
    return doc.items
  }

  getItem(itemId: string): Promise<BatchItemView> {
    return this.getJson(`/api/items/${encodeURIComponent(itemId)}`)
  }

  /** POST one judgment; resolves only on 204 (the server has persisted it). */
  async submitAnnotation(payload: AnnotationPayload): Promise<void> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    })
    if (resp.status !== 204) {
      throw new ApiError(resp.status, `POST /api/annotations -> ${resp.status}`)
    }
  }

  getAnnotations(raterId?: string): Promise<StoredAnnotation[]> {
    const query = raterId ? `?rater_id=${encodeURIComponent(raterId)}` : ''
    return this.getJson(`/api/annotations${query}`)
  }

  getAgreement(): Promise<AgreementReport> {
    return this.getJson('/api/agreement')
  }
}
