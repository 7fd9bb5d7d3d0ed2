import { boot } from './app'

declare global {
  interface Window {
    VIDQG_API_BASE?: string
  }
}

const base = window.VIDQG_API_BASE ?? ''
const root = document.getElementById('app')!
const raterId =
  new URLSearchParams(window.location.search).get('rater') ??
  window.prompt('Rater id:') ??
  'anonymous'

boot(root, base, raterId).catch((err) => {
  root.innerHTML = `<p class="banner">Could not load the batch: ${String(err)}</p>`
})
