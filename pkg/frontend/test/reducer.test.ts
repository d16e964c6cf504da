import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { applyRecord, initialView, reduceLine, replay, snapshot } from "../src/reducer.js";
import type { IndicatorRecord, SessionView } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = join(here, "..", "fixtures");

function goldenLines(): string[] {
  return readFileSync(join(fixture, "golden.ndjson"), "utf-8")
    .split("\n")
    .filter((l) => l.trim() !== "");
}

function indicator(t: number, state: "green" | "red", learner = "L1", freq = 0): IndicatorRecord {
  return { t, learner, kind: "indicator", freq, state };
}

function redSet(view: SessionView): string[] {
  return [...view.learners.values()]
    .filter((v) => v.state === "red")
    .map((v) => v.learner)
    .sort();
}

describe("golden fixture replay", () => {
  it("reduces the 500+ record fixture to the golden snapshot", () => {
    const lines = goldenLines();
    expect(lines.length).toBeGreaterThanOrEqual(500);
    const view = replay(lines);
    const golden = JSON.parse(readFileSync(join(fixture, "golden_snapshot.json"), "utf-8"));
    expect(snapshot(view)).toEqual(golden);
  });

  it("keeps the alert queue equal to the red set after every record", () => {
    let view = initialView();
    for (const line of goldenLines()) {
      view = reduceLine(view, line);
      expect([...view.alertQueue].sort()).toEqual(redSet(view));
    }
  });

  it("is a pure reducer: replaying twice gives identical snapshots", () => {
    const lines = goldenLines();
    expect(snapshot(replay(lines))).toEqual(snapshot(replay(lines)));
  });
});

describe("alert queue transitions", () => {
  it("enters the queue on green->red with redSince from the record", () => {
    let view = initialView();
    view = applyRecord(view, indicator(5.0, "green"));
    expect(view.alertQueue).toEqual([]);
    view = applyRecord(view, indicator(6.0, "red"));
    expect(view.alertQueue).toEqual(["L1"]);
    expect(view.learners.get("L1")!.redSince).toBe(6.0);
  });

  it("leaves the queue on red->green", () => {
    let view = initialView();
    view = applyRecord(view, indicator(1.0, "red"));
    expect(view.alertQueue).toEqual(["L1"]);
    view = applyRecord(view, indicator(2.0, "green"));
    expect(view.alertQueue).toEqual([]);
    expect(view.learners.get("L1")!.redSince).toBeNull();
  });

  it("orders the queue by redSince ascending", () => {
    let view = initialView();
    view = applyRecord(view, indicator(3.0, "red", "Lb"));
    view = applyRecord(view, indicator(1.0, "red", "Lc"));
    view = applyRecord(view, indicator(2.0, "red", "La"));
    expect(view.alertQueue).toEqual(["Lc", "La", "Lb"]);
  });

  it("a learner whose first record is red still enters the queue", () => {
    const view = applyRecord(initialView(), indicator(0.5, "red", "L7"));
    expect(view.alertQueue).toEqual(["L7"]);
  });
});

describe("malformed input", () => {
  const junk = [
    "not json at all",
    "{\"kind\":\"gesture\"}",
    "{\"t\":\"NaN\",\"learner\":\"L1\",\"kind\":\"indicator\",\"freq\":1,\"state\":\"red\"}",
    "{\"t\":1,\"learner\":\"L1\",\"kind\":\"indicator\",\"freq\":-3,\"state\":\"red\"}",
    "{\"t\":1,\"learner\":\"L1\",\"kind\":\"gesture\",\"gesture\":\"wave\"}",
    "[1,2,3]",
    "{\"t\":2,\"learner\":\"L1\",\"kind\":\"indicator\",\"freq\":1,\"state\":\"amber\"}",
  ];

  it("bumps the error counter and touches nothing else", () => {
    const base = replay(goldenLines().slice(0, 100));
    let view = base;
    for (const line of junk) {
      view = reduceLine(view, line);
    }
    expect(view.parseErrors).toBe(base.parseErrors + junk.length);
    const a = snapshot(view) as { learners: unknown; alert_queue: unknown };
    const b = snapshot(base) as { learners: unknown; alert_queue: unknown };
    expect(a.learners).toEqual(b.learners);
    expect(a.alert_queue).toEqual(b.alert_queue);
  });

  it("does not mutate the previous state object", () => {
    const lines = goldenLines();
    const mid = replay(lines.slice(0, 250));
    const frozen = JSON.stringify(snapshot(mid));
    for (const line of [...junk, ...lines.slice(250, 300)]) {
      reduceLine(mid, line);
    }
    expect(JSON.stringify(snapshot(mid))).toBe(frozen);
  });

  it("malformed lines interleaved with good ones do not change the outcome", () => {
    const lines = goldenLines();
    const polluted: string[] = [];
    lines.forEach((l, i) => {
      polluted.push(l);
      if (i % 50 === 0) polluted.push(junk[i % junk.length]);
    });
    const clean = snapshot(replay(lines)) as Record<string, unknown>;
    const dirty = snapshot(replay(polluted)) as Record<string, unknown>;
    expect(dirty.learners).toEqual(clean.learners);
    expect(dirty.alert_queue).toEqual(clean.alert_queue);
    expect(dirty.parse_errors).toBe(Math.ceil(lines.length / 50));
  });
});

describe("curve maintenance", () => {
  it("keeps timestamps strictly increasing by dropping stale samples", () => {
    let view = initialView();
    view = applyRecord(view, indicator(1.0, "green", "L1", 2));
    view = applyRecord(view, indicator(1.0, "green", "L1", 3));
    view = applyRecord(view, indicator(0.5, "green", "L1", 4));
    view = applyRecord(view, indicator(2.0, "green", "L1", 5));
    expect(view.learners.get("L1")!.curve).toEqual([
      [1.0, 2],
      [2.0, 5],
    ]);
  });

  it("caps the curve at the display horizon", () => {
    let view = initialView();
    for (let t = 0; t < 1000; t++) {
      view = applyRecord(view, indicator(t, "green", "L1", t % 7), 600);
    }
    const curve = view.learners.get("L1")!.curve;
    expect(curve[0][0]).toBeGreaterThanOrEqual(999 - 600);
    expect(curve[curve.length - 1][0]).toBe(999);
  });

  it("gesture records update lastGesture only", () => {
    let view = initialView();
    view = reduceLine(view, '{"t":3.5,"learner":"L1","kind":"gesture","gesture":"palm","distance":4.25}');
    const lv = view.learners.get("L1")!;
    expect(lv.lastGesture).toEqual({ t: 3.5, gesture: "palm", distance: 4.25 });
    expect(lv.curve).toEqual([]);
    expect(view.alertQueue).toEqual([]);
  });
});
