#!/usr/bin/env python3
"""Regenerate tests/fixtures/golden-trace.json from the Python toolkit.

The fixture is a 60 s closed-loop recording (forcing seed 7, fractional
operator, paper-eq6 plant) whose control trace the browser plant stepper
must reproduce sample for sample. Run from this directory:

    python3 make-golden-trace.py
"""

import json
import os

from operfit.loop import ForcingSpec, LoopConfig, generate_forcing, simulate
from operfit.models import PLANT_PRESETS, FractionalModel

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures",
                   "golden-trace.json")

KP, ALPHA, DELAY = 4.403, -0.4101, 0.117
SEED, STEP, DURATION = 7, 0.01, 60.0


def main() -> None:
    plant = PLANT_PRESETS["paper-eq6"]
    operator = FractionalModel(kp=KP, alpha=ALPHA, delay=DELAY)
    forcing = generate_forcing(ForcingSpec.default(seed=SEED), STEP, DURATION)
    session = simulate(
        LoopConfig(operator=operator, plant=plant, step=STEP,
                   duration=DURATION), forcing)
    fixture = {
        "comment": "closed-loop run generated by the reference simulator; "
                   "c drives the plant stepper, m is the expected output",
        "step": STEP,
        "plant": {"gain": plant.gain, "tau": plant.tau},
        "operator": {"kind": "yp3", "kp": KP, "alpha": ALPHA,
                     "delay": DELAY},
        "forcing_seed": SEED,
        "i": session.i.values.tolist(),
        "c": session.c.values.tolist(),
        "m": session.m.values.tolist(),
    }
    with open(OUT, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(fixture, fh)
        fh.write("\n")
    print(f"wrote {os.path.normpath(OUT)} ({len(session.i.values)} samples)")


if __name__ == "__main__":
    main()
