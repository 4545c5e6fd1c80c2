import { readFileSync } from "node:fs";

/** Reference closed-loop run recorded by the Python simulator. */
export interface GoldenTrace {
  step: number;
  plant: { gain: number; tau: number };
  operator: {
    kind: string;
    kp: number;
    alpha: number;
    delay: number;
  };
  forcing_seed: number;
  i: number[];
  c: number[];
  m: number[];
}

export function loadGoldenTrace(): GoldenTrace {
  const url = new URL("./fixtures/golden-trace.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as GoldenTrace;
}

export function rmsDifference(
  a: ArrayLike<number>,
  b: ArrayLike<number>,
): number {
  if (a.length !== b.length || a.length === 0) {
    throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  }
  let total = 0.0;
  for (let k = 0; k < a.length; k++) {
    const d = (a[k] as number) - (b[k] as number);
    total += d * d;
  }
  return Math.sqrt(total / a.length);
}

export function maxAbsDifference(
  a: ArrayLike<number>,
  b: ArrayLike<number>,
): number {
  let worst = 0.0;
  for (let k = 0; k < a.length; k++) {
    worst = Math.max(worst, Math.abs((a[k] as number) - (b[k] as number)));
  }
  return worst;
}
