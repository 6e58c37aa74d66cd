// Single-page wiring: transcript left, heatmap right, inspector bottom.
// Polling (no push); at most one in-flight phrase submission per session.

import { ApiError, HeatmapDoc, OutcomeDoc, SessionApi } from "./api.js";
import { hoverCell, hoverLabel, matrixToPixels } from "./heatmap.js";
import { candidateRows, emptyMessage } from "./inspector.js";
import { ViewState } from "./state.js";

const el = (id: string) => document.getElementById(id)!;

const params = new URLSearchParams(window.location.search);
const api = new SessionApi(params.get("api") ?? "http://127.0.0.1:8377");
const state = new ViewState();

function renderTranscript(): void {
  const box = el("transcript");
  box.innerHTML = "";
  for (const entry of state.transcript) {
    const div = document.createElement("div");
    div.className = `entry ${entry.who}`;
    let text = entry.text;
    if (entry.flags && entry.flags.length) {
      text += `  [${entry.flags.join(", ")}]`;
    }
    div.textContent = (entry.who === "user" ? "you: " : "engine: ") + text;
    box.appendChild(div);
  }
  box.scrollTop = box.scrollHeight;
}

function renderHeatmap(): void {
  const canvas = el("heatmap") as HTMLCanvasElement;
  const label = el("heatmap-label");
  const doc = state.heatmap;
  const ctx2d = canvas.getContext("2d")!;
  ctx2d.clearRect(0, 0, canvas.width, canvas.height);
  if (!doc || doc.matrix.length === 0) {
    label.textContent = "no context selected";
    return;
  }
  const rows = doc.matrix.length;
  const cols = doc.matrix[0].length;
  const pixels = matrixToPixels(doc.matrix);
  const image = new ImageData(pixels, cols, rows);
  const off = document.createElement("canvas");
  off.width = cols;
  off.height = rows;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx2d.imageSmoothingEnabled = false;
  ctx2d.drawImage(off, 0, 0, canvas.width, canvas.height);
  const names = doc.axes.map((a) => a.name || a.id).join(" x ");
  label.textContent = `${doc.context} (${names || "unspecified"})`;
}

function renderInspector(outcome: OutcomeDoc | null): void {
  const table = el("inspector") as HTMLTableElement;
  table.innerHTML =
    "<tr><th>stage</th><th>structure</th><th>score</th><th>flags</th><th>checks</th></tr>";
  if (!outcome) return;
  const rows = candidateRows(outcome);
  const empty = emptyMessage(rows);
  if (empty) {
    el("inspector-empty").textContent = empty;
    return;
  }
  el("inspector-empty").textContent = "";
  for (const row of rows) {
    const tr = document.createElement("tr");
    if (row.chosen) tr.className = "chosen";
    const checks = Object.entries(row.scores)
      .map(([k, v]) => `${k}=${v.toFixed(2)}`)
      .join(" ");
    for (const cell of [
      row.stage,
      row.error ? `${row.structure} (${row.error})` : row.structure,
      row.score.toFixed(3),
      row.flags.join(", "),
      checks,
    ]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    tr.addEventListener("click", () => {
      if (row.context) selectContext(row.context);
    });
    table.appendChild(tr);
  }
}

function renderClarification(): void {
  const panel = el("clarification");
  if (state.pendingClarification) {
    panel.textContent = `clarification needed: ${state.pendingClarification}`;
    panel.classList.add("active");
    (el("phrase") as HTMLInputElement).focus();
  } else {
    panel.textContent = "";
    panel.classList.remove("active");
  }
}

async function selectContext(ctxId: string): Promise<void> {
  state.selectedContext = ctxId;
  try {
    const doc = await api.heatmap(state.sessionId!, ctxId);
    if (state.applyHeatmap(doc)) renderHeatmap();
  } catch (err) {
    showError(err);
  }
}

let lastOutcome: OutcomeDoc | null = null;

async function submit(): Promise<void> {
  const input = el("phrase") as HTMLInputElement;
  const text = input.value.trim();
  if (!text || state.busy || !state.sessionId) return;
  state.busy = true;
  input.disabled = true;
  state.addUserPhrase(text);
  renderTranscript();
  try {
    const outcome = await api.submitPhrase(state.sessionId, text);
    if (state.applyOutcome(outcome)) {
      lastOutcome = outcome;
      renderTranscript();
      renderInspector(outcome);
      renderClarification();
      if (state.selectedContext) await selectContext(state.selectedContext);
    }
    input.value = "";
  } catch (err) {
    showError(err);
  } finally {
    state.busy = false;
    input.disabled = false;
    input.focus();
  }
}

function showError(err: unknown): void {
  const msg =
    err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
  el("status").textContent = msg;
}

async function poll(): Promise<void> {
  if (!state.sessionId || state.busy) return;
  try {
    if (state.selectedContext) {
      const doc = await api.heatmap(state.sessionId, state.selectedContext);
      if (state.applyHeatmap(doc)) renderHeatmap();
    }
    el("status").textContent = `session ${state.sessionId} v${state.version}`;
  } catch (err) {
    showError(err);
  }
}

async function start(): Promise<void> {
  try {
    const { session_id, version } = await api.createSession();
    state.startSession(session_id, version);
    el("status").textContent = `session ${session_id}`;
  } catch (err) {
    showError(err);
    return;
  }
  el("send").addEventListener("click", () => void submit());
  (el("phrase") as HTMLInputElement).addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void submit();
  });
  const canvas = el("heatmap") as HTMLCanvasElement;
  canvas.addEventListener("mousemove", (ev) => {
    const doc = state.heatmap;
    if (!doc || doc.matrix.length === 0) return;
    const rect = canvas.getBoundingClientRect();
    const cell = hoverCell(
      doc.matrix,
      rect.width,
      rect.height,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    );
    if (cell) el("hover").textContent = hoverLabel(doc, cell);
  });
  window.setInterval(() => void poll(), 1500);
}

void start();
