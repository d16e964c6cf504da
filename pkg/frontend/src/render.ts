// Render contract: SessionView -> display model. One tile per learner with
// a sparkline of the in-horizon curve and a state badge; red tiles sort
// first (oldest redSince first). Pure data, no DOM here.

import { DISPLAY_HORIZON_S, type LearnerView, type SessionView } from "./types.js";

export interface Tile {
  learner: string;
  badge: "green" | "red";
  redSince: number | null;
  sparkline: Array<[number, number]>;
  lastGesture: string;
}

export interface DisplayModel {
  tiles: Tile[];
  banner: string | null;
  alertCount: number;
}

function sparkline(view: LearnerView, horizon: number): Array<[number, number]> {
  if (view.curve.length === 0) return [];
  const newest = view.curve[view.curve.length - 1][0];
  return view.curve.filter(([t]) => t >= newest - horizon);
}

function describeGesture(view: LearnerView): string {
  if (!view.lastGesture || view.lastGesture.gesture === "none") return "-";
  return `${view.lastGesture.gesture} @ ${view.lastGesture.t.toFixed(1)}s`;
}

export function renderContract(
  state: SessionView,
  horizon: number = DISPLAY_HORIZON_S,
): DisplayModel {
  const red: Tile[] = [];
  const green: Tile[] = [];
  for (const id of [...state.learners.keys()].sort()) {
    const v = state.learners.get(id)!;
    const tile: Tile = {
      learner: id,
      badge: v.state,
      redSince: v.redSince,
      sparkline: sparkline(v, horizon),
      lastGesture: describeGesture(v),
    };
    (v.state === "red" ? red : green).push(tile);
  }
  red.sort((a, b) => {
    const ra = a.redSince ?? Infinity;
    const rb = b.redSince ?? Infinity;
    if (ra !== rb) return ra - rb;
    return a.learner < b.learner ? -1 : 1;
  });
  let banner: string | null = null;
  if (state.connection === "connecting") banner = "connecting to event stream...";
  else if (state.connection === "lost") banner = "stream lost - reconnecting";
  return { tiles: [...red, ...green], banner, alertCount: red.length };
}
