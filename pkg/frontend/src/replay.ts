/**
 * Read-only playback of a recorded session: parses the CSV (and
 * optional JSON metadata) and renders the i, e, c, m traces as stacked
 * strip charts. Nothing here mutates the session.
 */

import {
  ParsedSession,
  parseSessionCsv,
  parseSessionMetaJson,
  SessionMetadata,
  SIGNAL_NAMES,
  SignalName,
} from "./format.js";

export interface ReplayData {
  readonly session: ParsedSession;
  readonly meta: SessionMetadata | null;
}

/** Parse the file pair; metadata text is optional. */
export function loadReplay(csvText: string, jsonText?: string): ReplayData {
  const session = parseSessionCsv(csvText);
  if (session.t.length === 0) {
    throw new Error("session holds no samples");
  }
  const meta = jsonText === undefined ? null : parseSessionMetaJson(jsonText);
  return { session, meta };
}

export interface TraceRange {
  readonly lo: number;
  readonly hi: number;
}

/** Value range padded so flat traces still get a visible band. */
export function traceRange(values: ArrayLike<number>): TraceRange {
  let lo = Infinity;
  let hi = -Infinity;
  for (let k = 0; k < values.length; k++) {
    const v = values[k];
    if (v < lo) {
      lo = v;
    }
    if (v > hi) {
      hi = v;
    }
  }
  if (!(Number.isFinite(lo) && Number.isFinite(hi))) {
    throw new Error("cannot scale an empty trace");
  }
  const span = hi - lo;
  const pad = span > 0.0 ? 0.05 * span : Math.max(1.0, Math.abs(hi)) * 0.05;
  return { lo: lo - pad, hi: hi + pad };
}

/** Map a value into panel pixel space, y growing downward. */
export function valueToY(
  value: number,
  range: TraceRange,
  top: number,
  height: number,
): number {
  const span = range.hi - range.lo;
  return top + height - ((value - range.lo) / span) * height;
}

const TRACE_COLORS: Record<SignalName, string> = {
  i: "#4c78a8",
  e: "#e45756",
  c: "#f58518",
  m: "#54a24b",
};

const TRACE_LABELS: Record<SignalName, string> = {
  i: "i (forcing)",
  e: "e (error)",
  c: "c (control)",
  m: "m (output)",
};

/** Render every present trace into the canvas context. */
export function drawTraces(
  ctx: CanvasRenderingContext2D,
  data: ReplayData,
  width: number,
  height: number,
): void {
  const present = SIGNAL_NAMES.filter(
    (name) => data.session.signals[name] !== undefined,
  );
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  if (present.length === 0) {
    return;
  }
  const t = data.session.t;
  const t0 = t[0];
  const tSpan = Math.max(t[t.length - 1] - t0, Number.MIN_VALUE);
  const panelGap = 8;
  const panelHeight = (height - panelGap * (present.length + 1)) / present.length;
  present.forEach((name, index) => {
    const values = data.session.signals[name] as Float64Array;
    const top = panelGap + index * (panelHeight + panelGap);
    const range = traceRange(values);
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, top, width, panelHeight);
    ctx.strokeStyle = "#d0d0d0";
    ctx.strokeRect(0.5, top + 0.5, width - 1, panelHeight - 1);
    const zeroY = valueToY(0.0, range, top, panelHeight);
    if (zeroY >= top && zeroY <= top + panelHeight) {
      ctx.strokeStyle = "#e8e8e8";
      ctx.beginPath();
      ctx.moveTo(0, zeroY);
      ctx.lineTo(width, zeroY);
      ctx.stroke();
    }
    ctx.strokeStyle = TRACE_COLORS[name];
    ctx.lineWidth = 1.0;
    ctx.beginPath();
    for (let k = 0; k < values.length; k++) {
      const x = ((t[k] - t0) / tSpan) * (width - 1);
      const y = valueToY(values[k], range, top, panelHeight);
      if (k === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    }
    ctx.stroke();
    ctx.fillStyle = "#333333";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(TRACE_LABELS[name], 6, top + 14);
  });
}
