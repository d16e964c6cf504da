import type { GestureRecord, IndicatorRecord, WireRecord } from "./types.js";

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Parse one wire line; returns null on anything malformed. */
export function parseWireLine(line: string): WireRecord | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const rec = obj as Record<string, unknown>;
  if (!isFiniteNumber(rec.t) || typeof rec.learner !== "string") return null;
  if (rec.kind === "gesture") {
    if (rec.gesture !== "palm" && rec.gesture !== "fist" && rec.gesture !== "none") {
      return null;
    }
    if (rec.gesture === "none") {
      if (rec.distance !== undefined) return null;
    } else if (!isFiniteNumber(rec.distance)) {
      return null;
    }
    const out: GestureRecord = {
      t: rec.t,
      learner: rec.learner,
      kind: "gesture",
      gesture: rec.gesture,
    };
    if (rec.distance !== undefined) out.distance = rec.distance as number;
    return out;
  }
  if (rec.kind === "indicator") {
    if (!isFiniteNumber(rec.freq) || rec.freq < 0) return null;
    if (rec.state !== "green" && rec.state !== "red") return null;
    const out: IndicatorRecord = {
      t: rec.t,
      learner: rec.learner,
      kind: "indicator",
      freq: rec.freq,
      state: rec.state,
    };
    return out;
  }
  return null;
}
