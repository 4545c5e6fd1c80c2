/**
 * Session file pair serialization and parsing.
 *
 * A session is stored as <base>.csv with the signal table and
 * <base>.json with the metadata, matching the toolkit reader:
 *
 * - CSV header is exactly `t,i,e,c,m`; rows are comma separated with
 *   empty cells for absent signals; lines end with LF and the file
 *   carries a trailing newline.
 * - JSON holds step, plant {gain, tau} or null, subject_id, source,
 *   units, created_at, plus any extra keys.
 *
 * Numbers are written with `String(x)`, the shortest representation
 * that parses back to the identical double.
 */

import type { PlantModel } from "./plant.js";

export const CSV_HEADER = "t,i,e,c,m";
export const SIGNAL_NAMES = ["i", "e", "c", "m"] as const;
export type SignalName = (typeof SIGNAL_NAMES)[number];

export interface SessionMetadata {
  readonly step: number;
  readonly plant: PlantModel | null;
  readonly subjectId: string;
  readonly source: string;
  readonly units: string;
  readonly createdAt: string | null;
  readonly extra: Readonly<Record<string, unknown>>;
}

/** Format one numeric cell; rejects non-finite values. */
export function formatNumber(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot serialize non-finite value ${x}`);
  }
  return String(x);
}

/** Build the CSV text for a full set of equally long signal columns. */
export function sessionCsv(
  step: number,
  signals: Readonly<Record<SignalName, ArrayLike<number>>>,
): string {
  if (!Number.isFinite(step) || step <= 0.0) {
    throw new Error(`step must be positive, got ${step}`);
  }
  const n = signals.i.length;
  for (const name of SIGNAL_NAMES) {
    if (signals[name].length !== n) {
      throw new Error(
        `signal ${name} has ${signals[name].length} samples, expected ${n}`,
      );
    }
  }
  const lines = [CSV_HEADER];
  for (let k = 0; k < n; k++) {
    const row = [formatNumber(k * step)];
    for (const name of SIGNAL_NAMES) {
      row.push(formatNumber(signals[name][k] as number));
    }
    lines.push(row.join(","));
  }
  return lines.join("\n") + "\n";
}

/** Serialize metadata with the fixed keys first, then sorted extras. */
export function sessionMetaJson(meta: SessionMetadata): string {
  if (!Number.isFinite(meta.step) || meta.step <= 0.0) {
    throw new Error(`step must be positive, got ${meta.step}`);
  }
  const payload: Record<string, unknown> = {
    step: meta.step,
    plant:
      meta.plant === null
        ? null
        : { gain: meta.plant.gain, tau: meta.plant.tau },
    subject_id: meta.subjectId,
    source: meta.source,
    units: meta.units,
    created_at: meta.createdAt,
  };
  for (const key of Object.keys(meta.extra).sort()) {
    if (!(key in payload)) {
      payload[key] = meta.extra[key];
    }
  }
  return JSON.stringify(payload, null, 2) + "\n";
}

export interface ParsedSession {
  readonly t: Float64Array;
  /** Signals present in the file; absent columns are omitted. */
  readonly signals: Partial<Record<SignalName, Float64Array>>;
}

function parseCell(
  token: string,
  row: number,
  column: string,
): number | null {
  if (token === "") {
    return null;
  }
  const value = Number(token);
  if (!Number.isFinite(value) || token.trim() === "") {
    throw new Error(`row ${row}, column ${column}: bad value ${JSON.stringify(token)}`);
  }
  return value;
}

/** Parse session CSV text back into time and signal arrays. */
export function parseSessionCsv(text: string): ParsedSession {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0 || lines[0] !== CSV_HEADER) {
    throw new Error(`bad header, expected ${JSON.stringify(CSV_HEADER)}`);
  }
  const n = lines.length - 1;
  const t = new Float64Array(n);
  const columns: Record<SignalName, Float64Array> = {
    i: new Float64Array(n),
    e: new Float64Array(n),
    c: new Float64Array(n),
    m: new Float64Array(n),
  };
  const present: Record<SignalName, boolean> = {
    i: true,
    e: true,
    c: true,
    m: true,
  };
  for (let k = 0; k < n; k++) {
    const row = k + 2; // 1-based file line
    const cells = lines[k + 1].split(",");
    if (cells.length !== 5) {
      throw new Error(`row ${row}: expected 5 fields, got ${cells.length}`);
    }
    const time = parseCell(cells[0], row, "t");
    if (time === null) {
      throw new Error(`row ${row}: empty timestamp`);
    }
    t[k] = time;
    for (let j = 0; j < SIGNAL_NAMES.length; j++) {
      const name = SIGNAL_NAMES[j];
      const value = parseCell(cells[j + 1], row, name);
      if (value === null) {
        present[name] = false;
      } else {
        columns[name][k] = value;
      }
    }
  }
  const signals: Partial<Record<SignalName, Float64Array>> = {};
  for (const name of SIGNAL_NAMES) {
    if (present[name] || n === 0) {
      signals[name] = columns[name];
    }
  }
  return { t, signals };
}

/** Parse metadata JSON text; unknown keys land in `extra`. */
export function parseSessionMetaJson(text: string): SessionMetadata {
  let payload: unknown;
  try {
    payload = JSON.parse(text);
  } catch (exc) {
    throw new Error(`metadata is not valid JSON: ${String(exc)}`);
  }
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new Error("metadata must be a JSON object");
  }
  const record = payload as Record<string, unknown>;
  const step = record["step"];
  if (typeof step !== "number" || !Number.isFinite(step) || step <= 0.0) {
    throw new Error(`metadata must carry a positive step, got ${String(step)}`);
  }
  let plant: PlantModel | null = null;
  const plantRaw = record["plant"];
  if (plantRaw !== null && plantRaw !== undefined) {
    const entry = plantRaw as Record<string, unknown>;
    const gain = entry["gain"];
    const tau = entry["tau"];
    if (typeof gain !== "number" || typeof tau !== "number") {
      throw new Error("bad plant entry: needs numeric gain and tau");
    }
    plant = { gain, tau };
  }
  const known = new Set([
    "step",
    "plant",
    "subject_id",
    "source",
    "units",
    "created_at",
  ]);
  const extra: Record<string, unknown> = {};
  for (const key of Object.keys(record)) {
    if (!known.has(key)) {
      extra[key] = record[key];
    }
  }
  const createdAt = record["created_at"];
  return {
    step,
    plant,
    subjectId: String(record["subject_id"] ?? ""),
    source: String(record["source"] ?? "external"),
    units: String(record["units"] ?? ""),
    createdAt: typeof createdAt === "string" ? createdAt : null,
    extra,
  };
}
