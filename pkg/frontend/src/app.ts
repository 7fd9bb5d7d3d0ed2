import { ApiClient } from './api'
import { RaterSession, type Draft } from './session'
import { BLOOM_LEVELS, type AgreementReport, type AlphaValue, type BatchItemView } from './types'

function esc(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export function formatAlpha(value: AlphaValue): string {
  return value === 'degenerate' ? 'degenerate' : value.toFixed(3)
}

/** Static markup of the rating form for one batch item. */
export function itemScreenHtml(
  item: BatchItemView,
  draft: Draft,
  position: { index: number; total: number; completed: number },
): string {
  const bloomRadios = BLOOM_LEVELS.map(
    (level) => `
    <label class="bloom">
      <input type="radio" name="bloom" value="${level.value}"
             ${draft.bloom === level.value ? 'checked' : ''}>
      <b>${level.label}</b> <small>${esc(level.hint)}</small>
    </label>`,
  ).join('\n')
  return `
  <div class="item" data-item-id="${esc(item.item_id)}">
    <p class="progress">Item ${position.index + 1} / ${position.total}
      (${position.completed} completed) &middot; ${esc(item.model)} &middot; mode ${item.mode}</p>
    <h2 class="question">${esc(item.question) || '<i>(empty output)</i>'}</h2>
    <details open>
      <summary>Transcript excerpt (${esc(item.video_id)})</summary>
      <p class="excerpt">${esc(item.transcript_excerpt)}</p>
    </details>
    <label><input type="checkbox" id="relevance" ${draft.relevance ? 'checked' : ''}>
      Relevance: does the question refer to the video content?</label>
    <label><input type="checkbox" id="answerability" ${draft.answerability ? 'checked' : ''}>
      Answerability: can it be answered from the video content?</label>
    <fieldset><legend>Level of understanding</legend>${bloomRadios}</fieldset>
    <div class="nav">
      <button id="prev">Back</button>
      <button id="submit">Submit &amp; next</button>
    </div>
    <p class="banner" id="banner" hidden></p>
  </div>`
}

export function completionHtml(report: AgreementReport, total: number): string {
  return `
  <div class="done">
    <h2>All ${total} items rated</h2>
    <p>Inter-rater agreement (Krippendorff's alpha):</p>
    <ul>
      <li>Relevance: ${formatAlpha(report.relevance)}</li>
      <li>Answerability: ${formatAlpha(report.answerability)}</li>
      <li>Bloom level: ${formatAlpha(report.bloom)}</li>
    </ul>
  </div>`
}

/** Wires the session to the DOM; one instance per page. */
export class App {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly session: RaterSession,
  ) {}

  async start(): Promise<void> {
    const stored = await this.api.getAnnotations(this.session.raterId)
    this.session.prefill(stored)
    this.render()
  }

  private render(): void {
    if (this.session.isDone()) {
      void this.renderCompletion()
      return
    }
    const item = this.session.current()
    this.root.innerHTML = itemScreenHtml(item, this.session.draftFor(item.item_id), {
      index: this.session.cursor,
      total: this.session.size,
      completed: this.session.progress,
    })
    this.bind(item)
  }

  private bind(item: BatchItemView): void {
    const input = <T extends HTMLElement>(sel: string) => this.root.querySelector(sel) as T
    input<HTMLInputElement>('#relevance').onchange = (e) =>
      this.session.setDraft(item.item_id, {
        relevance: (e.target as HTMLInputElement).checked,
      })
    input<HTMLInputElement>('#answerability').onchange = (e) =>
      this.session.setDraft(item.item_id, {
        answerability: (e.target as HTMLInputElement).checked,
      })
    for (const radio of this.root.querySelectorAll<HTMLInputElement>('input[name=bloom]')) {
      radio.onchange = () =>
        this.session.setDraft(item.item_id, { bloom: radio.value as Draft['bloom'] })
    }
    input<HTMLButtonElement>('#prev').onclick = () => {
      this.session.prev()
      this.render()
    }
    input<HTMLButtonElement>('#submit').onclick = () => void this.submit(item)
  }

  private async submit(item: BatchItemView): Promise<void> {
    const banner = this.root.querySelector('#banner') as HTMLElement
    try {
      await this.api.submitAnnotation(this.session.payloadFor(item.item_id))
    } catch (err) {
      // draft is still in the session; nothing is lost on retry
      banner.hidden = false
      banner.textContent = `Submission failed (${String(err)}). Your input is kept; press Submit to retry.`
      return
    }
    this.session.markCompleted(item.item_id)
    this.render()
  }

  private async renderCompletion(): Promise<void> {
    const report = await this.api.getAgreement()
    this.root.innerHTML = completionHtml(report, this.session.size)
  }
}

export async function boot(root: HTMLElement, baseUrl: string, raterId: string): Promise<App> {
  const api = new ApiClient(baseUrl)
  const items = await api.getBatch()
  const app = new App(root, api, new RaterSession(raterId, items))
  await app.start()
  return app
}
