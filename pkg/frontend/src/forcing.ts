/**
 * Random-appearing sum-of-sinusoids forcing.
 *
 * The stock construction mirrors the toolkit's: component frequencies
 * are distinct prime multiples of one cycle per `period` seconds
 * nearest log-spaced targets, so no component is a harmonic or a
 * low-order combination of another; amplitudes fall off as
 * 1/frequency and are scaled to an exact RMS over one period; phases
 * come from a small seeded generator so runs are reproducible.
 */

export interface ForcingComponent {
  readonly amplitude: number;
  /** Angular frequency in rad/s, > 0. */
  readonly frequency: number;
  readonly phase: number;
}

export interface ForcingSpec {
  readonly components: readonly ForcingComponent[];
  readonly seed: number;
}

export interface ForcingOptions {
  seed?: number;
  nComponents?: number;
  freqLo?: number;
  freqHi?: number;
  period?: number;
  rms?: number;
}

/** Deterministic 32-bit generator returning floats in [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function validateForcing(spec: ForcingSpec): void {
  if (spec.components.length === 0) {
    throw new Error("forcing needs at least one component");
  }
  const freqs = spec.components.map((c) => c.frequency);
  if (freqs.some((w) => !Number.isFinite(w) || w <= 0.0)) {
    throw new Error("forcing frequencies must be positive");
  }
  if (new Set(freqs).size !== freqs.length) {
    throw new Error("forcing frequencies must be pairwise distinct");
  }
  for (const c of spec.components) {
    if (!Number.isFinite(c.amplitude) || !Number.isFinite(c.phase)) {
      throw new Error("forcing amplitudes and phases must be finite");
    }
  }
}

function primesUpTo(limit: number): number[] {
  const sieve = new Uint8Array(limit).fill(1);
  sieve[0] = 0;
  if (limit > 1) {
    sieve[1] = 0;
  }
  for (let p = 2; p * p < limit; p++) {
    if (sieve[p]) {
      for (let q = p * p; q < limit; q += p) {
        sieve[q] = 0;
      }
    }
  }
  const out: number[] = [];
  for (let k = 2; k < limit; k++) {
    if (sieve[k]) {
      out.push(k);
    }
  }
  return out;
}

/** Nearest unused prime to each target, first come first served. */
export function nearestDistinctPrimes(targets: readonly number[]): number[] {
  const limit = Math.max(64, Math.trunc(2 * Math.max(...targets)) + 64);
  const primes = primesUpTo(limit);
  const taken = new Set<number>();
  const out: number[] = [];
  for (const target of targets) {
    const order = primes
      .map((p, index) => ({ key: Math.abs(p - target), index }))
      .sort((a, b) => a.key - b.key || a.index - b.index);
    const pick = order.find((entry) => !taken.has(primes[entry.index]));
    if (pick === undefined) {
      throw new Error(`no unused prime below ${limit} for target ${target}`);
    }
    const prime = primes[pick.index];
    taken.add(prime);
    out.push(prime);
  }
  return out;
}

/** Build the stock forcing: seeded phases, exact RMS over one period. */
export function defaultForcing(options: ForcingOptions = {}): ForcingSpec {
  const {
    seed = 0,
    nComponents = 10,
    freqLo = 0.1,
    freqHi = 2.0,
    period = 120.0,
    rms = 1.0,
  } = options;
  if (!Number.isInteger(nComponents) || nComponents < 1) {
    throw new Error("need at least one component");
  }
  if (!(0.0 < freqLo && freqLo < freqHi)) {
    throw new Error("need 0 < freqLo < freqHi");
  }
  if (!Number.isFinite(period) || period <= 0.0) {
    throw new Error(`period must be positive, got ${period}`);
  }
  if (!Number.isFinite(rms) || rms <= 0.0) {
    throw new Error(`rms must be positive, got ${rms}`);
  }
  const fundamental = (2.0 * Math.PI) / period;
  const logLo = Math.log10(freqLo);
  const logHi = Math.log10(freqHi);
  const targets: number[] = [];
  for (let k = 0; k < nComponents; k++) {
    const exponent =
      nComponents === 1
        ? logLo
        : logLo + (k * (logHi - logLo)) / (nComponents - 1);
    targets.push(Math.pow(10.0, exponent) / fundamental);
  }
  const multiples = nearestDistinctPrimes(targets);
  const freqs = multiples.map((m) => fundamental * m);
  const raw = freqs.map((w) => 1.0 / w);
  const scale =
    rms / Math.sqrt(raw.reduce((acc, r) => acc + r * r, 0.0) / 2.0);
  const rng = mulberry32(seed);
  const components = freqs.map((frequency, k) => ({
    amplitude: scale * raw[k],
    frequency,
    phase: rng() * 2.0 * Math.PI,
  }));
  const spec = { components, seed };
  validateForcing(spec);
  return spec;
}

/** Sample the forcing on a uniform grid of n points starting at t = 0. */
export function sampleForcing(
  spec: ForcingSpec,
  step: number,
  n: number,
): Float64Array {
  validateForcing(spec);
  if (!Number.isFinite(step) || step <= 0.0) {
    throw new Error(`step must be positive, got ${step}`);
  }
  if (!Number.isInteger(n) || n < 1) {
    throw new Error(`need at least one sample, got ${n}`);
  }
  const out = new Float64Array(n);
  for (let k = 0; k < n; k++) {
    const t = k * step;
    let total = 0.0;
    for (const { amplitude, frequency, phase } of spec.components) {
      total += amplitude * Math.sin(frequency * t + phase);
    }
    out[k] = total;
  }
  return out;
}
