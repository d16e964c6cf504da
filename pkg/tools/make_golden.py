#!/usr/bin/env python3
"""Produce the dashboard's golden fixture via the primary CLI.

Renders a synthetic session, trains the background model, builds the
gesture database, runs the pipeline to NDJSON, and derives the expected
final SessionView snapshot by the dashboard's documented reduction rules
(gesture records set last_gesture; indicator records extend the curve,
set the state, and move the learner in/out of the alert queue on
green->red / red->green transitions).

Usage: python3 tools/make_golden.py [out_dir]  (default frontend/fixtures)
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from handwatch import synth
from handwatch.cli import main as cli
from handwatch.frameio import write_pnm

SCENARIO = """
duration = 470
width = 96
height = 72
fps = 10
background = flat
noise_amp = 4
event = palm 60 100 static 48 34 0.6 20
event = palm 200 240 static 48 34 0.6 20
event = fist 300 320 static 48 34 0.6 20
event = palm 380 420 static 48 34 0.62 20
"""

TRAIN = """
duration = 40
width = 96
height = 72
fps = 10
background = flat
noise_amp = 4
"""

RUN_FLAGS = [
    "--skin-hue", "20", "--min-area", "80",
    "--window-w", "6", "--red-threshold", "5", "--grace", "3",
    "--learner", "L1",
]


def reduce_snapshot(lines):
    learners = {}
    alert_queue = []
    parse_errors = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            parse_errors += 1
            continue
        lid = rec["learner"]
        view = learners.setdefault(
            lid, {"curve": [], "state": "green", "last_gesture": None, "red_since": None}
        )
        if rec["kind"] == "gesture":
            lg = {"t": rec["t"], "gesture": rec["gesture"]}
            if "distance" in rec:
                lg["distance"] = rec["distance"]
            view["last_gesture"] = lg
        elif rec["kind"] == "indicator":
            last_t = view["curve"][-1][0] if view["curve"] else float("-inf")
            if rec["t"] > last_t:
                view["curve"].append([rec["t"], rec["freq"]])
            was = view["state"]
            view["state"] = rec["state"]
            if was != "red" and rec["state"] == "red":
                view["red_since"] = rec["t"]
                if lid not in alert_queue:
                    alert_queue.append(lid)
            elif was == "red" and rec["state"] == "green":
                view["red_since"] = None
                alert_queue = [x for x in alert_queue if x != lid]
        alert_queue.sort(
            key=lambda x: (
                learners[x]["red_since"] if learners[x]["red_since"] is not None else float("inf"),
                x,
            )
        )
    return {
        "learners": {k: learners[k] for k in sorted(learners)},
        "alert_queue": alert_queue,
        "parse_errors": parse_errors,
    }


def main(out_dir="frontend/fixtures"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as td:
        work = Path(td)
        (work / "train.cfg").write_text(TRAIN)
        (work / "run.cfg").write_text(SCENARIO)
        assert cli(["gen-synth", str(work / "train.cfg"), "--seed", "11", "--out", str(work / "train")]) == 0
        assert cli(["gen-synth", str(work / "run.cfg"), "--seed", "11", "--out", str(work / "run")]) == 0

        masks = work / "masks"
        masks.mkdir()
        rng = np.random.default_rng(8)
        for i in range(12):
            shape = "palm" if i % 2 == 0 else "fist"
            m = synth.render_hand(shape, 0.5 + 0.03 * i, (48, 36), (96, 72), rng)
            write_pnm(masks / f"{shape}_{i:03d}.pgm", m.astype(np.uint8) * 255)

        assert cli(["train-bg", str(work / "train"), "--out", str(work / "bg.cbk")]) == 0
        assert cli(["build-db", str(masks), "--out", str(work / "db.cpdh")]) == 0
        ndjson = work / "events.ndjson"
        assert cli(["run", str(work / "run"), "--bg", str(work / "bg.cbk"),
                    "--db", str(work / "db.cpdh"), "--out", str(ndjson), *RUN_FLAGS]) == 0

        lines = ndjson.read_text(encoding="utf-8").splitlines()
        print(f"fixture: {len(lines)} records")
        assert len(lines) >= 500, "golden fixture must have at least 500 records"
        snap = reduce_snapshot(lines)
        states = [json.loads(l)["state"] for l in lines if '"indicator"' in l]
        flips = [states[0]] + [b for a, b in zip(states, states[1:]) if a != b]
        print(f"indicator transitions: {'->'.join(flips)}")
        assert "red" in flips and "green" in flips, "fixture must exercise both states"

        (out / "golden.ndjson").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (out / "golden_snapshot.json").write_text(
            json.dumps(snap, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {out/'golden.ndjson'} and {out/'golden_snapshot.json'}")


if __name__ == "__main__":
    main(*sys.argv[1:])
