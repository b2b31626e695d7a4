import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseCorpusJsonl, resolveHandle, type CheckResponse } from "../src/api.js";
import {
  formatCap,
  formatGauge,
  renderCheckView,
  renderFailure,
  renderNotFound,
  subScoreEntries,
} from "../src/render.js";

const here = dirname(fileURLToPath(import.meta.url));
const recorded: CheckResponse = JSON.parse(
  readFileSync(join(here, "fixtures", "response_096.json"), "utf-8"),
);
const recorded429: { status: number; body: { error: string; reset_at: string } } =
  JSON.parse(readFileSync(join(here, "fixtures", "response_429.json"), "utf-8"));

describe("gauge formatting", () => {
  it("renders one decimal out of five", () => {
    expect(formatGauge(4.8)).toBe("4.8/5");
    expect(formatGauge(0)).toBe("0.0/5");
    expect(formatGauge(5)).toBe("5.0/5");
  });

  it("rounds to one decimal", () => {
    expect(formatGauge(4.7649999)).toBe("4.8/5");
    expect(formatGauge(1.24)).toBe("1.2/5");
  });
});

describe("recorded 0.96 response", () => {
  it("shows 4.8/5 on the gauge", () => {
    expect(recorded.raw_scores.english.overall).toBe(0.96);
    const html = renderCheckView(recorded, "english");
    expect(html).toContain("4.8/5");
  });

  it("shows the CAP straight from the response field", () => {
    const html = renderCheckView(recorded, "english");
    expect(html).toContain(`data-cap="${recorded.cap.english}"`);
    expect(html).toContain(formatCap(recorded.cap.english));
    expect(formatCap(recorded.cap.english)).toBe("90.0%");
  });

  it("renders one bar per bot class from raw sub-scores", () => {
    const entries = subScoreEntries(recorded.raw_scores.english);
    expect(entries.map((e) => e.name)).toEqual(["spammer"]);
    const html = renderCheckView(recorded, "english");
    for (const entry of entries) {
      expect(html).toContain(entry.value.toFixed(2));
    }
  });

  it("every displayed number traces back to a response field", () => {
    const html = renderCheckView(recorded, "english");
    expect(html).toContain(formatGauge(recorded.display_scores.english.overall));
    expect(html).toContain(`data-raw="${recorded.raw_scores.english.overall}"`);
    expect(html).toContain(`timeline tweets: ${recorded.user.timeline_tweets}`);
    expect(html).toContain(recorded.model_version);
  });

  it("family toggle re-renders the same stored response without refetching", () => {
    const english = renderCheckView(recorded, "english");
    const universal = renderCheckView(recorded, "universal");
    expect(universal).toContain(
      formatGauge(recorded.display_scores.universal.overall),
    );
    expect(universal).toContain('data-family="universal"');
    expect(universal).not.toBe(english);
  });

  it("shows the low-data badge exactly when the flag is set", () => {
    expect(renderCheckView(recorded, "english")).not.toContain("low data");
    const flagged = { ...recorded, low_data: true };
    expect(renderCheckView(flagged, "english")).toContain("low data");
  });
});

describe("failure banners", () => {
  it("quota exhaustion renders the rate-limit banner with the reset time", () => {
    expect(recorded429.status).toBe(429);
    const html = renderFailure({
      status: recorded429.status,
      message: recorded429.body.error,
      resetAt: recorded429.body.reset_at,
    });
    expect(html).toContain("rate-limit");
    expect(html).toContain(recorded429.body.error);
    expect(html).toContain(recorded429.body.reset_at);
  });

  it("other failures render a plain error banner", () => {
    const html = renderFailure({ status: 400, message: "user.created_at: missing" });
    expect(html).toContain("error");
    expect(html).toContain("user.created_at: missing");
    expect(html).not.toContain("rate-limit");
  });

  it("unresolvable handles get an inline not-found message", () => {
    expect(renderNotFound("@ghost")).toContain("account not found");
  });
});

describe("corpus handle resolution", () => {
  const payload = JSON.parse(
    readFileSync(join(here, "fixtures", "request_payload.json"), "utf-8"),
  );
  const corpusText = JSON.stringify(payload) + "\n";

  it("resolves handles case-insensitively with or without @", () => {
    const corpus = parseCorpusJsonl(corpusText);
    expect(resolveHandle(corpus, "@CheckMe42")?.user.user_id).toBe("fix-user");
    expect(resolveHandle(corpus, "checkme42")?.user.user_id).toBe("fix-user");
  });

  it("returns null for unknown handles", () => {
    const corpus = parseCorpusJsonl(corpusText);
    expect(resolveHandle(corpus, "@nobody")).toBeNull();
  });
});
