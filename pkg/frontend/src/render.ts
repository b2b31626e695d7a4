// Pure rendering: response JSON in, HTML strings out. No fetching, no state,
// so toggling between score families re-renders the stored response as-is.

import type { ApiFailure, CheckResponse, FamilyScores, ScoreFamily } from "./api.js";

export function formatGauge(displayScore: number): string {
  return `${(Math.round(displayScore * 10) / 10).toFixed(1)}/5`;
}

export function formatCap(cap: number | null): string {
  return cap === null ? "n/a" : `${(cap * 100).toFixed(1)}%`;
}

export function subScoreEntries(scores: FamilyScores): { name: string; value: number }[] {
  return Object.keys(scores)
    .filter((key) => key !== "overall")
    .sort()
    .map((name) => ({ name, value: scores[name] }));
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;" })[ch]!,
  );
}

export function renderCheckView(response: CheckResponse, family: ScoreFamily): string {
  const display = response.display_scores[family];
  const raw = response.raw_scores[family];
  const cap = response.cap[family];
  const bars = subScoreEntries(raw)
    .map(
      ({ name, value }) => `
      <div class="bar-row">
        <span class="bar-label">${escapeHtml(name)}</span>
        <div class="bar-track">
          <div class="bar-fill" style="width: ${(value * 100).toFixed(1)}%"></div>
        </div>
        <span class="bar-value">${value.toFixed(2)}</span>
      </div>`,
    )
    .join("");
  const badge = response.low_data
    ? '<span class="badge low-data">low data</span>'
    : "";
  return `
    <div class="result" data-family="${family}" data-raw="${raw.overall}" data-cap="${cap}">
      <div class="account">@${escapeHtml(response.user.screen_name)} ${badge}</div>
      <div class="gauge">
        <span class="gauge-value">${formatGauge(display.overall)}</span>
        <span class="gauge-caption">${family} bot score</span>
      </div>
      <div class="cap-line">
        Probability of automation at this score or above:
        <strong class="cap-value">${formatCap(cap)}</strong>
      </div>
      <div class="sub-scores">${bars}</div>
      <div class="meta">
        timeline tweets: ${response.user.timeline_tweets},
        mentions: ${response.user.mention_tweets},
        probe: ${escapeHtml(response.user.probe_time)},
        model: ${escapeHtml(response.model_version)}
      </div>
    </div>`;
}

export function renderFailure(failure: ApiFailure): string {
  if (failure.status === 429) {
    const reset = failure.resetAt
      ? ` Quota resets at ${escapeHtml(failure.resetAt)}.`
      : "";
    return `<div class="banner rate-limit">Rate limit reached: ${escapeHtml(
      failure.message,
    )}.${reset}</div>`;
  }
  return `<div class="banner error">${escapeHtml(
    `${failure.status || "network"}: ${failure.message}`,
  )}</div>`;
}

export function renderNotFound(handle: string): string {
  return `<div class="banner error">account not found: ${escapeHtml(handle)}</div>`;
}
