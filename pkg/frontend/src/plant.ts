/**
 * Rate-command plant gain / (s * (tau*s + 1)) advanced under a
 * zero-order hold. The update coefficients are the exact discretization
 * used by the reference simulator, so a control trace stepped here
 * reproduces its output to floating-point accuracy.
 */

export interface PlantModel {
  /** Static gain, > 0. */
  readonly gain: number;
  /** Lag time constant in seconds, > 0. */
  readonly tau: number;
}

export const PLANT_PRESETS: Readonly<Record<string, PlantModel>> = {
  "paper-eq6": { gain: 1.0, tau: 1.0 / 3.0 },
  "paper-eq13": { gain: 60.2362 / 39.37, tau: 1.0 / 39.37 },
};

export function plantPreset(name: string): PlantModel {
  const plant = PLANT_PRESETS[name];
  if (plant === undefined) {
    const known = Object.keys(PLANT_PRESETS).sort().join(", ");
    throw new Error(`unknown plant preset ${name}; known: ${known}`);
  }
  return plant;
}

export function validatePlant(plant: PlantModel): void {
  if (!Number.isFinite(plant.gain) || plant.gain <= 0.0) {
    throw new Error(`plant gain must be positive, got ${plant.gain}`);
  }
  if (!Number.isFinite(plant.tau) || plant.tau <= 0.0) {
    throw new Error(`plant tau must be positive, got ${plant.tau}`);
  }
}

export interface ZohCoefficients {
  readonly a12: number;
  readonly a22: number;
  readonly b1: number;
  readonly b2: number;
}

/**
 * Exact zero-order-hold update coefficients. With E = exp(-step/tau)
 * the state advances as
 *
 *   position' = position + a12 * velocity + b1 * u
 *   velocity' =            a22 * velocity + b2 * u
 */
export function zohCoefficients(plant: PlantModel, step: number): ZohCoefficients {
  validatePlant(plant);
  if (!Number.isFinite(step) || step <= 0.0) {
    throw new Error(`step must be positive, got ${step}`);
  }
  const decay = Math.exp(-step / plant.tau);
  const a12 = plant.tau * (1.0 - decay);
  return {
    a12,
    a22: decay,
    b1: plant.gain * (step - a12),
    b2: plant.gain * (1.0 - decay),
  };
}

/** Plant state integrator: position and rate under piecewise-constant input. */
export class PlantStepper {
  position = 0.0;
  velocity = 0.0;
  private readonly coeffs: ZohCoefficients;

  constructor(plant: PlantModel, step: number) {
    this.coeffs = zohCoefficients(plant, step);
  }

  /** Advance one step with `control` held constant over the interval. */
  advance(control: number): void {
    const { a12, a22, b1, b2 } = this.coeffs;
    const velocity = this.velocity;
    this.position = this.position + a12 * velocity + b1 * control;
    this.velocity = a22 * velocity + b2 * control;
  }
}
