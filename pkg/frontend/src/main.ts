// DOM wiring: resolve a handle against a loaded corpus (or take a pasted
// payload), call the service once per click, and render from the stored
// response. At most one request is in flight; the family toggle never
// refetches.

import {
  AccountPayload,
  ApiError,
  CheckResponse,
  ScoreFamily,
  checkAccount,
  parseCorpusJsonl,
  resolveHandle,
} from "./api.js";
import { renderCheckView, renderFailure, renderNotFound } from "./render.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

let corpus = new Map<string, AccountPayload>();
let lastResponse: CheckResponse | null = null;
let family: ScoreFamily = "english";
let inFlight = false;

function redraw(): void {
  $("toggle-english").classList.toggle("active", family === "english");
  $("toggle-universal").classList.toggle("active", family === "universal");
  if (lastResponse) {
    $("result").innerHTML = renderCheckView(lastResponse, family);
  }
}

async function onCheck(): Promise<void> {
  if (inFlight) return;
  const handle = $<HTMLInputElement>("handle").value;
  const pasted = $<HTMLTextAreaElement>("payload").value.trim();
  let payload: unknown;
  if (pasted) {
    try {
      payload = JSON.parse(pasted);
    } catch (err) {
      $("result").innerHTML = renderFailure({
        status: 0,
        message: `pasted payload is not valid JSON (${err})`,
      });
      return;
    }
  } else {
    const found = resolveHandle(corpus, handle);
    if (!found) {
      $("result").innerHTML = renderNotFound(handle || "(empty)");
      return;
    }
    payload = found;
  }

  const button = $<HTMLButtonElement>("check");
  inFlight = true;
  button.disabled = true;
  button.textContent = "Checking...";
  try {
    lastResponse = await checkAccount(
      $<HTMLInputElement>("base-url").value,
      $<HTMLInputElement>("api-key").value,
      payload,
    );
    redraw();
  } catch (err) {
    if (err instanceof ApiError) {
      $("result").innerHTML = renderFailure(err.failure);
    } else {
      $("result").innerHTML = renderFailure({ status: 0, message: String(err) });
    }
  } finally {
    inFlight = false;
    button.disabled = false;
    button.textContent = "Check user";
  }
}

async function loadCorpusFile(file: File): Promise<void> {
  corpus = parseCorpusJsonl(await file.text());
  $("corpus-status").textContent = `${corpus.size} accounts loaded`;
}

function init(): void {
  $("check").addEventListener("click", () => void onCheck());
  $("handle").addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void onCheck();
  });
  $("toggle-english").addEventListener("click", () => {
    family = "english";
    redraw();
  });
  $("toggle-universal").addEventListener("click", () => {
    family = "universal";
    redraw();
  });
  $<HTMLInputElement>("corpus-file").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (file) void loadCorpusFile(file);
  });
  redraw();
}

init();
