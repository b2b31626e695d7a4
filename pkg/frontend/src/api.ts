// Typed view of the scoring service's JSON contract plus the fetch wrapper.
// The UI never recomputes scores: everything rendered comes from these fields.

export type ScoreFamily = "english" | "universal";

export interface FamilyScores {
  overall: number;
  [botClass: string]: number;
}

export interface CheckResponse {
  user: {
    user_id: string;
    screen_name: string;
    probe_time: string;
    timeline_tweets: number;
    mention_tweets: number;
  };
  raw_scores: Record<ScoreFamily, FamilyScores>;
  display_scores: Record<ScoreFamily, FamilyScores>;
  cap: Record<ScoreFamily, number | null>;
  low_data: boolean;
  model_version: string;
  server_time: string;
}

export interface ApiFailure {
  status: number;
  message: string;
  resetAt?: string;
}

export class ApiError extends Error {
  failure: ApiFailure;

  constructor(failure: ApiFailure) {
    super(failure.message);
    this.failure = failure;
  }
}

export async function checkAccount(
  baseUrl: string,
  apiKey: string,
  payload: unknown,
): Promise<CheckResponse> {
  const url = baseUrl.replace(/\/+$/, "") + "/check_account";
  let response: Response;
  try {
    response = await fetch(url, {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-API-Key": apiKey },
      body: JSON.stringify(payload),
    });
  } catch (err) {
    throw new ApiError({ status: 0, message: `service unreachable: ${err}` });
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError({
      status: response.status,
      message: typeof body.error === "string" ? body.error : `HTTP ${response.status}`,
      resetAt: typeof body.reset_at === "string" ? body.reset_at : undefined,
    });
  }
  return body as CheckResponse;
}

// ---------------------------------------------------------------------------
// Handle resolution against a locally loaded fixture corpus (JSON-lines of
// account payloads, the same format the datasets live in on disk).
// ---------------------------------------------------------------------------

export interface AccountPayload {
  user: { user_id: string; screen_name: string };
  timeline: unknown[];
  mentions: unknown[];
  probe_time: string;
}

export function parseCorpusJsonl(text: string): Map<string, AccountPayload> {
  const byHandle = new Map<string, AccountPayload>();
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const payload = JSON.parse(trimmed) as AccountPayload;
    byHandle.set(payload.user.screen_name.toLowerCase(), payload);
  }
  return byHandle;
}

export function resolveHandle(
  corpus: Map<string, AccountPayload>,
  handle: string,
): AccountPayload | null {
  const cleaned = handle.trim().replace(/^@/, "").toLowerCase();
  return corpus.get(cleaned) ?? null;
}
