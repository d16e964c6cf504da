// Wire records (newline-delimited JSON from the pipeline) and view state.

export type GestureName = "palm" | "fist" | "none";
export type IndicatorState = "green" | "red";

export interface GestureRecord {
  t: number;
  learner: string;
  kind: "gesture";
  gesture: GestureName;
  distance?: number;
}

export interface IndicatorRecord {
  t: number;
  learner: string;
  kind: "indicator";
  freq: number;
  state: IndicatorState;
}

export type WireRecord = GestureRecord | IndicatorRecord;

export type ConnectionState = "connecting" | "live" | "lost";

export interface LastGesture {
  t: number;
  gesture: GestureName;
  distance?: number;
}

export interface LearnerView {
  learner: string;
  /** (t, freq) samples, strictly increasing t, capped at the display horizon */
  curve: Array<[number, number]>;
  state: IndicatorState;
  lastGesture: LastGesture | null;
  redSince: number | null;
}

export interface SessionView {
  learners: Map<string, LearnerView>;
  connection: ConnectionState;
  /** learner ids currently red, ordered by redSince ascending (ties by id) */
  alertQueue: string[];
  parseErrors: number;
}

/** Seconds of curve history a tile keeps and shows. */
export const DISPLAY_HORIZON_S = 600;
