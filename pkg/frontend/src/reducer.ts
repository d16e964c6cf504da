// Pure reducer: SessionView x wire line -> SessionView.
//
// Gesture records only update the learner's last gesture. Indicator records
// append to the frequency curve (strictly increasing timestamps; stale or
// duplicate times are dropped), set the red/green state, and maintain the
// alert queue: a learner enters on green->red with redSince = record time
// and leaves on red->green. Malformed lines bump parseErrors and change
// nothing else.

import { parseWireLine } from "./parse.js";
import {
  DISPLAY_HORIZON_S,
  type ConnectionState,
  type LearnerView,
  type SessionView,
  type WireRecord,
} from "./types.js";

export function initialView(): SessionView {
  return {
    learners: new Map(),
    connection: "connecting",
    alertQueue: [],
    parseErrors: 0,
  };
}

function cloneLearner(v: LearnerView): LearnerView {
  return {
    learner: v.learner,
    curve: v.curve.slice(),
    state: v.state,
    lastGesture: v.lastGesture,
    redSince: v.redSince,
  };
}

function freshLearner(id: string): LearnerView {
  return { learner: id, curve: [], state: "green", lastGesture: null, redSince: null };
}

function cloneView(s: SessionView): SessionView {
  return {
    learners: new Map(s.learners),
    connection: s.connection,
    alertQueue: s.alertQueue.slice(),
    parseErrors: s.parseErrors,
  };
}

function sortAlerts(queue: string[], learners: Map<string, LearnerView>): string[] {
  return queue.slice().sort((a, b) => {
    const ra = learners.get(a)?.redSince ?? Infinity;
    const rb = learners.get(b)?.redSince ?? Infinity;
    if (ra !== rb) return ra - rb;
    return a < b ? -1 : a > b ? 1 : 0;
  });
}

function trimCurve(curve: Array<[number, number]>, horizon: number): Array<[number, number]> {
  if (curve.length === 0) return curve;
  const newest = curve[curve.length - 1][0];
  let start = 0;
  while (start < curve.length && curve[start][0] < newest - horizon) start++;
  return start > 0 ? curve.slice(start) : curve;
}

export function applyRecord(
  state: SessionView,
  record: WireRecord,
  horizon: number = DISPLAY_HORIZON_S,
): SessionView {
  const next = cloneView(state);
  const prev = state.learners.get(record.learner) ?? freshLearner(record.learner);
  const view = cloneLearner(prev);
  if (record.kind === "gesture") {
    view.lastGesture = {
      t: record.t,
      gesture: record.gesture,
      ...(record.distance !== undefined ? { distance: record.distance } : {}),
    };
  } else {
    const lastT = view.curve.length ? view.curve[view.curve.length - 1][0] : -Infinity;
    if (record.t > lastT) {
      view.curve.push([record.t, record.freq]);
      view.curve = trimCurve(view.curve, horizon);
    }
    const was = view.state;
    view.state = record.state;
    if (was !== "red" && record.state === "red") {
      view.redSince = record.t;
      if (!next.alertQueue.includes(record.learner)) {
        next.alertQueue.push(record.learner);
      }
    } else if (was === "red" && record.state === "green") {
      view.redSince = null;
      next.alertQueue = next.alertQueue.filter((id) => id !== record.learner);
    }
  }
  next.learners.set(record.learner, view);
  next.alertQueue = sortAlerts(next.alertQueue, next.learners);
  return next;
}

/** Reduce one raw wire line; malformed input leaves the view intact. */
export function reduceLine(
  state: SessionView,
  line: string,
  horizon: number = DISPLAY_HORIZON_S,
): SessionView {
  const trimmed = line.trim();
  if (trimmed === "") return state;
  const record = parseWireLine(trimmed);
  if (record === null) {
    return { ...cloneView(state), parseErrors: state.parseErrors + 1 };
  }
  return applyRecord(state, record, horizon);
}

export function setConnection(state: SessionView, connection: ConnectionState): SessionView {
  if (state.connection === connection) return state;
  return { ...cloneView(state), connection };
}

/** Replay a whole stream from the initial state (fixtures, tests). */
export function replay(lines: Iterable<string>, horizon: number = DISPLAY_HORIZON_S): SessionView {
  let view = initialView();
  for (const line of lines) {
    view = reduceLine(view, line, horizon);
  }
  return view;
}

/** Canonical JSON-friendly form, used for golden-snapshot comparison. */
export function snapshot(state: SessionView): unknown {
  const learners: Record<string, unknown> = {};
  for (const id of [...state.learners.keys()].sort()) {
    const v = state.learners.get(id)!;
    learners[id] = {
      curve: v.curve,
      state: v.state,
      last_gesture: v.lastGesture
        ? {
            t: v.lastGesture.t,
            gesture: v.lastGesture.gesture,
            ...(v.lastGesture.distance !== undefined
              ? { distance: v.lastGesture.distance }
              : {}),
          }
        : null,
      red_since: v.redSince,
    };
  }
  return {
    learners,
    alert_queue: state.alertQueue,
    parse_errors: state.parseErrors,
  };
}
