/**
 * Live compensatory tracking run.
 *
 * Per tick k the loop mirrors the reference simulator exactly:
 *
 *   m_k  from the plant state
 *   e_k  = i_k - m_k
 *   c_k  = the operator's control, read from the input device
 *   advance the plant with c_k held over the tick
 *
 * so e == i - m holds identically at every recorded tick. A fixed
 * timestep driver decouples ticking from display refresh: the recorded
 * step is exactly 1 / tick_rate regardless of frame timing, and ticks
 * missed during a stalled frame are filled by holding the last sampled
 * input, each one counted as dropped.
 */

import { PlantModel, PlantStepper, validatePlant } from "./plant.js";
import { ForcingSpec, sampleForcing, validateForcing } from "./forcing.js";
import {
  SessionMetadata,
  sessionCsv,
  sessionMetaJson,
  SignalName,
} from "./format.js";

export const TICK_RATE_MIN = 30;
export const TICK_RATE_MAX = 120;

export interface TaskConfig {
  readonly plant: PlantModel;
  readonly forcing: ForcingSpec;
  /** Tick rate in Hz; integer between 30 and 120. */
  readonly tickRate: number;
  /** Run length in seconds, > 0. */
  readonly duration: number;
  /** Maps input device units to control units. */
  readonly inputGain: number;
}

export function validateTaskConfig(config: TaskConfig): void {
  validatePlant(config.plant);
  validateForcing(config.forcing);
  if (
    !Number.isInteger(config.tickRate) ||
    config.tickRate < TICK_RATE_MIN ||
    config.tickRate > TICK_RATE_MAX
  ) {
    throw new Error(
      `tickRate must be an integer in [${TICK_RATE_MIN}, ${TICK_RATE_MAX}], ` +
        `got ${config.tickRate}`,
    );
  }
  if (!Number.isFinite(config.duration) || config.duration <= 0.0) {
    throw new Error(`duration must be positive, got ${config.duration}`);
  }
  if (Math.round(config.duration * config.tickRate) < 1) {
    throw new Error(
      `duration ${config.duration} too short for one tick at ` +
        `${config.tickRate} Hz`,
    );
  }
  if (!Number.isFinite(config.inputGain)) {
    throw new Error(`inputGain must be finite, got ${config.inputGain}`);
  }
}

export interface TickSample {
  readonly tick: number;
  readonly i: number;
  readonly e: number;
  readonly c: number;
  readonly m: number;
}

/** One run's state: recorded buffers, the plant, and the tick count. */
export class LiveRun {
  readonly plant: PlantModel;
  readonly step: number;
  private readonly iBuf: Float64Array;
  private readonly eBuf: Float64Array;
  private readonly cBuf: Float64Array;
  private readonly mBuf: Float64Array;
  private readonly stepper: PlantStepper;
  private ticked = 0;

  constructor(plant: PlantModel, step: number, forcing: ArrayLike<number>) {
    validatePlant(plant);
    if (!Number.isFinite(step) || step <= 0.0) {
      throw new Error(`step must be positive, got ${step}`);
    }
    if (forcing.length < 1) {
      throw new Error("forcing trace must hold at least one sample");
    }
    this.plant = plant;
    this.step = step;
    this.iBuf = Float64Array.from(forcing);
    if (!this.iBuf.every(Number.isFinite)) {
      throw new Error("forcing trace must be finite");
    }
    this.eBuf = new Float64Array(this.iBuf.length);
    this.cBuf = new Float64Array(this.iBuf.length);
    this.mBuf = new Float64Array(this.iBuf.length);
    this.stepper = new PlantStepper(plant, step);
  }

  /** Total ticks the run will record. */
  get length(): number {
    return this.iBuf.length;
  }

  /** Ticks recorded so far. */
  get elapsed(): number {
    return this.ticked;
  }

  get done(): boolean {
    return this.ticked >= this.iBuf.length;
  }

  /** The error the display should show before the next tick is taken. */
  get pendingError(): number {
    const k = Math.min(this.ticked, this.iBuf.length - 1);
    return this.iBuf[k] - this.stepper.position;
  }

  /** Record one tick with the operator control sampled as c_k. */
  tick(control: number): TickSample {
    if (this.done) {
      throw new Error(`run already complete after ${this.ticked} ticks`);
    }
    if (!Number.isFinite(control)) {
      throw new Error(`control must be finite, got ${control}`);
    }
    const k = this.ticked;
    const m = this.stepper.position;
    const e = this.iBuf[k] - m;
    this.eBuf[k] = e;
    this.cBuf[k] = control;
    this.mBuf[k] = m;
    this.stepper.advance(control);
    this.ticked = k + 1;
    return { tick: k, i: this.iBuf[k], e, c: control, m };
  }

  /** The most recent recorded tick, or null before the first one. */
  latest(): TickSample | null {
    if (this.ticked === 0) {
      return null;
    }
    const k = this.ticked - 1;
    return {
      tick: k,
      i: this.iBuf[k],
      e: this.eBuf[k],
      c: this.cBuf[k],
      m: this.mBuf[k],
    };
  }

  /** Views of the recorded prefix, one per signal, equal lengths. */
  signals(): Record<SignalName, Float64Array> {
    const n = this.ticked;
    return {
      i: this.iBuf.subarray(0, n),
      e: this.eBuf.subarray(0, n),
      c: this.cBuf.subarray(0, n),
      m: this.mBuf.subarray(0, n),
    };
  }
}

/** Build a run from a validated config by sampling its forcing. */
export function makeLiveRun(config: TaskConfig): LiveRun {
  validateTaskConfig(config);
  const n = Math.round(config.duration * config.tickRate);
  const step = 1.0 / config.tickRate;
  const forcing = sampleForcing(config.forcing, step, n);
  return new LiveRun(config.plant, step, forcing);
}

/**
 * Fixed-timestep accumulator. Each display frame reports its duration
 * and the freshly sampled input; the driver decides how many ticks are
 * due. When a frame spans several ticks, the catch-up ticks reuse the
 * input sampled before the stall and count as dropped; only the final,
 * on-time tick consumes the fresh sample.
 */
export class FixedStepDriver {
  readonly run: LiveRun;
  readonly tickRate: number;
  private elapsedSeconds = 0.0;
  private heldControl = 0.0;
  private dropped = 0;

  constructor(run: LiveRun, tickRate: number) {
    if (!Number.isInteger(tickRate) || tickRate < 1) {
      throw new Error(`tickRate must be a positive integer, got ${tickRate}`);
    }
    this.run = run;
    this.tickRate = tickRate;
  }

  get droppedTicks(): number {
    return this.dropped;
  }

  /**
   * Account one display frame; returns the number of ticks executed.
   * The 1e-6-tick slack absorbs float accumulation error so frames of
   * exactly one tick period never stall on the boundary.
   */
  advance(frameSeconds: number, control: number): number {
    if (!Number.isFinite(frameSeconds) || frameSeconds < 0.0) {
      throw new Error(`frame duration must be >= 0, got ${frameSeconds}`);
    }
    if (!Number.isFinite(control)) {
      throw new Error(`control must be finite, got ${control}`);
    }
    this.elapsedSeconds += frameSeconds;
    const due = Math.min(
      Math.floor(this.elapsedSeconds * this.tickRate + 1e-6),
      this.run.length,
    );
    let executed = 0;
    while (this.run.elapsed < due) {
      const onTime = this.run.elapsed === due - 1;
      this.run.tick(onTime ? control : this.heldControl);
      executed += 1;
    }
    if (executed > 1) {
      this.dropped += executed - 1;
    }
    this.heldControl = control;
    return executed;
  }
}

export interface ExportOptions {
  /** File pair base name without extension. */
  readonly baseName: string;
  readonly tickRate: number;
  readonly inputGain: number;
  readonly droppedTicks: number;
  readonly subjectId?: string;
  readonly units?: string;
  /** ISO-8601 timestamp, or null to omit. */
  readonly createdAt?: string | null;
}

export interface SessionFilePair {
  readonly csvName: string;
  readonly csvText: string;
  readonly jsonName: string;
  readonly jsonText: string;
}

/** Serialize a completed run to the toolkit's CSV + JSON file pair. */
export function exportSession(
  run: LiveRun,
  options: ExportOptions,
): SessionFilePair {
  if (!run.done) {
    throw new Error(
      `run is not complete: ${run.elapsed} of ${run.length} ticks`,
    );
  }
  if (options.baseName === "") {
    throw new Error("baseName must not be empty");
  }
  if (!Number.isInteger(options.droppedTicks) || options.droppedTicks < 0) {
    throw new Error(
      `droppedTicks must be a non-negative integer, got ${options.droppedTicks}`,
    );
  }
  const meta: SessionMetadata = {
    step: run.step,
    plant: run.plant,
    subjectId: options.subjectId ?? "",
    source: "ui_recording",
    units: options.units ?? "display units",
    createdAt: options.createdAt ?? null,
    extra: {
      tick_rate: options.tickRate,
      input_gain: options.inputGain,
      dropped_ticks: options.droppedTicks,
      display: "compensatory",
    },
  };
  return {
    csvName: `${options.baseName}.csv`,
    csvText: sessionCsv(run.step, run.signals()),
    jsonName: `${options.baseName}.json`,
    jsonText: sessionMetaJson(meta),
  };
}
