/**
 * Browser wiring for the tracking task and the replay view.
 *
 * The task canvas is a compensatory display: a fixed center reference
 * and a cursor offset vertically by the current error. The target
 * itself is never shown. The operator steers with vertical pointer
 * displacement over the canvas (primary) or the up and down arrow keys
 * (fallback); both are scaled by the configured input gain. Export
 * happens entirely client side via file download.
 */

import { plantPreset, PLANT_PRESETS } from "./plant.js";
import { defaultForcing } from "./forcing.js";
import {
  exportSession,
  FixedStepDriver,
  LiveRun,
  makeLiveRun,
  SessionFilePair,
  TaskConfig,
} from "./run.js";
import { drawTraces, loadReplay, ReplayData } from "./replay.js";

/** Full-scale error, in display units, mapped to the half height. */
const ERROR_FULL_SCALE = 3.0;
/** Arrow-key input slew rate in device units per second. */
const KEY_RATE = 2.0;

const byId = <T extends HTMLElement>(doc: Document, id: string): T => {
  const el = doc.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
};

const downloadTextFile = (
  doc: Document,
  name: string,
  text: string,
  type: string,
): void => {
  const blob = new Blob([text], { type });
  const url = URL.createObjectURL(blob);
  const link = doc.createElement("a");
  link.href = url;
  link.download = name;
  doc.body.appendChild(link);
  link.click();
  link.remove();
  URL.revokeObjectURL(url);
};

interface RunHandles {
  run: LiveRun;
  driver: FixedStepDriver;
  config: TaskConfig;
  rafId: number;
  lastTimestamp: number | null;
}

export function initTrackingApp(doc: Document): void {
  const taskCanvas = byId<HTMLCanvasElement>(doc, "task-canvas");
  const replayCanvas = byId<HTMLCanvasElement>(doc, "replay-canvas");
  const startButton = byId<HTMLButtonElement>(doc, "btn-start");
  const abortButton = byId<HTMLButtonElement>(doc, "btn-abort");
  const exportCsvButton = byId<HTMLButtonElement>(doc, "btn-export-csv");
  const exportJsonButton = byId<HTMLButtonElement>(doc, "btn-export-json");
  const plantSelect = byId<HTMLSelectElement>(doc, "cfg-plant");
  const tickRateInput = byId<HTMLInputElement>(doc, "cfg-tick-rate");
  const durationInput = byId<HTMLInputElement>(doc, "cfg-duration");
  const inputGainInput = byId<HTMLInputElement>(doc, "cfg-input-gain");
  const seedInput = byId<HTMLInputElement>(doc, "cfg-seed");
  const subjectInput = byId<HTMLInputElement>(doc, "cfg-subject");
  const hud = byId<HTMLElement>(doc, "hud");
  const replayFileInput = byId<HTMLInputElement>(doc, "replay-file");
  const replayInfo = byId<HTMLElement>(doc, "replay-info");

  for (const name of Object.keys(PLANT_PRESETS).sort()) {
    const option = doc.createElement("option");
    option.value = name;
    option.textContent = name;
    plantSelect.appendChild(option);
  }

  const taskCtx = taskCanvas.getContext("2d");
  const replayCtx = replayCanvas.getContext("2d");
  if (taskCtx === null || replayCtx === null) {
    throw new Error("canvas 2d context unavailable");
  }

  let handles: RunHandles | null = null;
  let finished: SessionFilePair | null = null;
  // Operator input in device units, clamped to [-1, 1].
  let inputUnits = 0.0;
  let keyDirection = 0;

  const setHud = (text: string): void => {
    hud.textContent = text;
  };

  const setExportEnabled = (enabled: boolean): void => {
    exportCsvButton.disabled = !enabled;
    exportJsonButton.disabled = !enabled;
  };

  const drawTask = (error: number | null): void => {
    const { width, height } = taskCanvas;
    taskCtx.clearRect(0, 0, width, height);
    taskCtx.fillStyle = "#101418";
    taskCtx.fillRect(0, 0, width, height);
    const centerY = height / 2;
    taskCtx.strokeStyle = "#3a4754";
    taskCtx.lineWidth = 1.0;
    taskCtx.beginPath();
    taskCtx.moveTo(0, centerY);
    taskCtx.lineTo(width, centerY);
    taskCtx.stroke();
    if (error === null) {
      return;
    }
    const scaled = Math.max(-1.0, Math.min(1.0, error / ERROR_FULL_SCALE));
    const y = centerY - scaled * (height / 2 - 10);
    taskCtx.strokeStyle = "#ffd166";
    taskCtx.lineWidth = 3.0;
    taskCtx.beginPath();
    taskCtx.moveTo(width / 2 - 30, y);
    taskCtx.lineTo(width / 2 + 30, y);
    taskCtx.stroke();
  };

  const readConfig = (): TaskConfig => ({
    plant: plantPreset(plantSelect.value),
    forcing: defaultForcing({ seed: Number(seedInput.value) }),
    tickRate: Number(tickRateInput.value),
    duration: Number(durationInput.value),
    inputGain: Number(inputGainInput.value),
  });

  const finishRun = (current: RunHandles): void => {
    const createdAt = new Date().toISOString();
    const baseName = `run-${createdAt.replace(/[-:]/g, "").slice(0, 15)}`;
    finished = exportSession(current.run, {
      baseName,
      tickRate: current.config.tickRate,
      inputGain: current.config.inputGain,
      droppedTicks: current.driver.droppedTicks,
      subjectId: subjectInput.value,
      createdAt,
    });
    handles = null;
    setExportEnabled(true);
    startButton.disabled = false;
    abortButton.disabled = true;
    setHud(
      `done: ${current.run.length} ticks recorded, ` +
        `${current.driver.droppedTicks} dropped; ready to export`,
    );
  };

  const frame = (timestamp: number): void => {
    const current = handles;
    if (current === null) {
      return;
    }
    const last = current.lastTimestamp;
    current.lastTimestamp = timestamp;
    const dt = last === null ? 0.0 : Math.max(0.0, (timestamp - last) / 1000.0);
    if (keyDirection !== 0) {
      inputUnits = Math.max(
        -1.0,
        Math.min(1.0, inputUnits + keyDirection * KEY_RATE * dt),
      );
    }
    const control = inputUnits * current.config.inputGain;
    current.driver.advance(dt, control);
    drawTask(current.run.pendingError);
    const seconds = current.run.elapsed * current.run.step;
    setHud(
      `t = ${seconds.toFixed(1)} s / ${current.config.duration} s, ` +
        `ticks ${current.run.elapsed}/${current.run.length}, ` +
        `dropped ${current.driver.droppedTicks}`,
    );
    if (current.run.done) {
      finishRun(current);
      return;
    }
    current.rafId = requestAnimationFrame(frame);
  };

  const startRun = (): void => {
    let config: TaskConfig;
    let run: LiveRun;
    try {
      config = readConfig();
      run = makeLiveRun(config);
    } catch (exc) {
      setHud(`config error: ${exc instanceof Error ? exc.message : exc}`);
      return;
    }
    finished = null;
    inputUnits = 0.0;
    keyDirection = 0;
    setExportEnabled(false);
    startButton.disabled = true;
    abortButton.disabled = false;
    handles = {
      run,
      driver: new FixedStepDriver(run, config.tickRate),
      config,
      rafId: 0,
      lastTimestamp: null,
    };
    drawTask(run.pendingError);
    handles.rafId = requestAnimationFrame(frame);
  };

  const abortRun = (): void => {
    if (handles === null) {
      return;
    }
    cancelAnimationFrame(handles.rafId);
    handles = null;
    startButton.disabled = false;
    abortButton.disabled = true;
    setHud("aborted; nothing exported");
    drawTask(null);
  };

  startButton.addEventListener("click", startRun);
  abortButton.addEventListener("click", abortRun);
  exportCsvButton.addEventListener("click", () => {
    if (finished !== null) {
      downloadTextFile(doc, finished.csvName, finished.csvText, "text/csv");
    }
  });
  exportJsonButton.addEventListener("click", () => {
    if (finished !== null) {
      downloadTextFile(
        doc,
        finished.jsonName,
        finished.jsonText,
        "application/json",
      );
    }
  });

  taskCanvas.addEventListener("pointermove", (event: PointerEvent) => {
    if (handles === null) {
      return;
    }
    const rect = taskCanvas.getBoundingClientRect();
    const centerY = rect.top + rect.height / 2;
    const offset = (centerY - event.clientY) / (rect.height / 2);
    inputUnits = Math.max(-1.0, Math.min(1.0, offset));
  });

  doc.addEventListener("keydown", (event: KeyboardEvent) => {
    if (event.key === "ArrowUp") {
      keyDirection = 1;
      event.preventDefault();
    } else if (event.key === "ArrowDown") {
      keyDirection = -1;
      event.preventDefault();
    }
  });
  doc.addEventListener("keyup", (event: KeyboardEvent) => {
    if (
      (event.key === "ArrowUp" && keyDirection === 1) ||
      (event.key === "ArrowDown" && keyDirection === -1)
    ) {
      keyDirection = 0;
    }
  });

  const showReplay = (data: ReplayData, label: string): void => {
    drawTraces(replayCtx, data, replayCanvas.width, replayCanvas.height);
    const rows = data.session.t.length;
    const meta = data.meta;
    const details =
      meta === null
        ? "no metadata file"
        : `source=${meta.source}, step=${meta.step}`;
    replayInfo.textContent = `${label}: ${rows} samples (${details})`;
  };

  replayFileInput.addEventListener("change", () => {
    const files = Array.from(replayFileInput.files ?? []);
    const csvFile = files.find((f) => f.name.endsWith(".csv"));
    const jsonFile = files.find((f) => f.name.endsWith(".json"));
    if (csvFile === undefined) {
      replayInfo.textContent = "pick the session .csv (and optionally .json)";
      return;
    }
    const jobs: Promise<string>[] = [csvFile.text()];
    if (jsonFile !== undefined) {
      jobs.push(jsonFile.text());
    }
    Promise.all(jobs)
      .then(([csvText, jsonText]) => {
        showReplay(loadReplay(csvText, jsonText), csvFile.name);
      })
      .catch((exc: unknown) => {
        replayInfo.textContent = `replay error: ${String(exc)}`;
      });
  });

  drawTask(null);
  setExportEnabled(false);
  abortButton.disabled = true;
  setHud("configure the task and press start");
}
