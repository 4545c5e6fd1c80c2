export {
  PLANT_PRESETS,
  PlantStepper,
  plantPreset,
  validatePlant,
  zohCoefficients,
} from "./plant.js";
export type { PlantModel, ZohCoefficients } from "./plant.js";
export {
  defaultForcing,
  mulberry32,
  nearestDistinctPrimes,
  sampleForcing,
  validateForcing,
} from "./forcing.js";
export type {
  ForcingComponent,
  ForcingOptions,
  ForcingSpec,
} from "./forcing.js";
export {
  CSV_HEADER,
  SIGNAL_NAMES,
  formatNumber,
  parseSessionCsv,
  parseSessionMetaJson,
  sessionCsv,
  sessionMetaJson,
} from "./format.js";
export type {
  ParsedSession,
  SessionMetadata,
  SignalName,
} from "./format.js";
export {
  FixedStepDriver,
  LiveRun,
  TICK_RATE_MAX,
  TICK_RATE_MIN,
  exportSession,
  makeLiveRun,
  validateTaskConfig,
} from "./run.js";
export type {
  ExportOptions,
  SessionFilePair,
  TaskConfig,
  TickSample,
} from "./run.js";
export { drawTraces, loadReplay, traceRange, valueToY } from "./replay.js";
export type { ReplayData, TraceRange } from "./replay.js";
export { initTrackingApp } from "./ui.js";
