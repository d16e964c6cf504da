// Browser entry: wire the stream client to the reducer and redraw tiles.

import { connectStream } from "./client.js";
import { initialView, reduceLine, setConnection } from "./reducer.js";
import { renderContract, type Tile } from "./render.js";
import type { SessionView } from "./types.js";

const params = new URLSearchParams(window.location.search);
const endpoint = params.get("stream") ?? "http://127.0.0.1:8707/";

let view: SessionView = initialView();
let dirty = true;

function drawSparkline(canvas: HTMLCanvasElement, points: Array<[number, number]>) {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (points.length < 2) return;
  const t0 = points[0][0];
  const t1 = points[points.length - 1][0];
  const fmax = Math.max(1e-9, ...points.map(([, f]) => f));
  ctx.beginPath();
  for (let i = 0; i < points.length; i++) {
    const [t, f] = points[i];
    const x = ((t - t0) / Math.max(1e-9, t1 - t0)) * (canvas.width - 2) + 1;
    const y = canvas.height - 2 - (f / fmax) * (canvas.height - 4);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.strokeStyle = "#2b6cb0";
  ctx.lineWidth = 1.5;
  ctx.stroke();
}

function tileElement(tile: Tile): HTMLElement {
  const el = document.createElement("div");
  el.className = `tile ${tile.badge}`;
  const head = document.createElement("div");
  head.className = "tile-head";
  const badge = document.createElement("span");
  badge.className = `badge ${tile.badge}`;
  head.appendChild(badge);
  const name = document.createElement("span");
  name.textContent = tile.learner;
  head.appendChild(name);
  const gesture = document.createElement("span");
  gesture.className = "gesture";
  gesture.textContent = tile.lastGesture;
  head.appendChild(gesture);
  el.appendChild(head);
  const canvas = document.createElement("canvas");
  canvas.width = 220;
  canvas.height = 48;
  drawSparkline(canvas, tile.sparkline);
  el.appendChild(canvas);
  return el;
}

function redraw() {
  if (!dirty) return;
  dirty = false;
  const model = renderContract(view);
  const bannerEl = document.getElementById("banner")!;
  bannerEl.textContent = model.banner ?? "";
  bannerEl.style.display = model.banner ? "block" : "none";
  const alerts = document.getElementById("alerts")!;
  alerts.textContent = model.alertCount
    ? `${model.alertCount} learner(s) need attention`
    : "";
  const roster = document.getElementById("roster")!;
  roster.replaceChildren(...model.tiles.map(tileElement));
}

connectStream(endpoint, {
  onLine: (line) => {
    view = reduceLine(view, line);
    dirty = true;
  },
  onConnection: (state) => {
    view = setConnection(view, state);
    dirty = true;
  },
});

setInterval(redraw, 250);
