"""Command-line entry points: train-bg, build-db, run, eval, gen-synth, bench."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import background, cpdh, kernels, metrics, pipeline, skintrack, synth
from .frameio import FrameIOError, load_frames, read_pnm
from .imgcore import BinaryMask


def _add_skin_args(p):
    p.add_argument("--skin-hue", type=float, default=None,
                   help="seed the skin model from a known hue in degrees")
    p.add_argument("--skin-roi", type=str, default=None,
                   help="x,y,w,h region of the first frame to sample skin from")
    p.add_argument("--fps", type=float, default=10.0)


def _skin_model(args, source) -> skintrack.SkinModel:
    if args.skin_roi:
        x, y, w, h = (int(v) for v in args.skin_roi.split(","))
        first = source.frame(0)
        return skintrack.build_skin_model(first, skintrack.Roi(x, y, w, h))
    hue = args.skin_hue if args.skin_hue is not None else 20.0
    return skintrack.skin_model_from_hue(hue)


def _config_from(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        debounce_k=args.debounce_k,
        window_w=args.window_w,
        red_threshold=args.red_threshold,
        grace=args.grace,
        max_distance=args.max_distance,
        min_area=args.min_area,
        reinit_period=args.reinit_period,
    )


def _add_run_config_args(p):
    p.add_argument("--debounce-k", type=int, default=5)
    p.add_argument("--window-w", type=float, default=300.0)
    p.add_argument("--red-threshold", type=float, default=0.5)
    p.add_argument("--grace", type=float, default=120.0)
    p.add_argument("--max-distance", type=float, default=None)
    p.add_argument("--min-area", type=int, default=300)
    p.add_argument("--reinit-period", type=int, default=20)
    p.add_argument("--cascade", type=str, default=None)
    _add_skin_args(p)


def _make_session(args, source, learner="L1") -> pipeline.Session:
    model = background.load_codebook(args.bg)
    db = cpdh.load_gesture_db(args.db)
    cascade = skintrack.load_cascade(args.cascade) if args.cascade else None
    return pipeline.Session(
        model, db, _skin_model(args, source),
        _config_from(args), learner=learner, cascade=cascade,
    )


def cmd_train_bg(args) -> int:
    source = load_frames(args.frames_dir, fps=args.fps)
    params = background.CodebookParams(
        eps_train=args.eps_train, eps_detect=args.eps_detect,
        alpha=args.alpha, beta=args.beta, mnrl_prune_frac=args.mnrl_frac,
    )
    model = background.train_codebook(list(source), params)
    background.save_codebook(model, args.out)
    kmax = int(model.counts.max())
    print(f"trained codebook {model.width}x{model.height} on {model.train_len} frames "
          f"(max {kmax} codewords/pixel) -> {args.out}")
    return 0


def cmd_build_db(args) -> int:
    masks_dir = Path(args.masks_dir)
    labeled = []
    for p in sorted(masks_dir.iterdir()):
        if p.suffix not in (".pgm", ".ppm"):
            continue
        label = p.stem.split("_")[0].lower()
        if label not in cpdh.LABELS:
            continue
        data = read_pnm(p)
        if data.ndim == 3:
            data = data[..., 0]
        labeled.append((BinaryMask(data >= 128), label))
    if not labeled:
        raise FrameIOError(f"no palm_*/fist_* mask files in {masks_dir}")
    params = cpdh.CpdhParams(n_points=args.n, u=args.u, v=args.v)
    db = cpdh.build_gesture_db(labeled, params)
    cpdh.save_gesture_db(db, args.out)
    print(f"built gesture db: {len(db)} entries ({db.skipped} skipped) -> {args.out}")
    return 0


def cmd_run(args) -> int:
    source = load_frames(args.frames_dir, fps=args.fps)
    session = _make_session(args, source, learner=args.learner)

    sinks = []
    out_fh = None
    server = None
    if args.out:
        out_fh = open(args.out, "w", encoding="utf-8", newline="\n")
        sinks.append(out_fh.write)
    if args.listen:
        from .server import LineStreamServer

        host, port = args.listen.rsplit(":", 1)
        server = LineStreamServer(host, int(port))
        print(f"serving event stream on http://{server.address[0]}:{server.address[1]}/",
              file=sys.stderr)
        sinks.append(server.broadcast)
    if not sinks:
        sinks.append(sys.stdout.write)

    def sink(line: str):
        for s in sinks:
            s(line)

    try:
        if args.listen and args.wait_client:
            import time as _t

            deadline = _t.monotonic() + args.wait_client
            while server.client_count() == 0 and _t.monotonic() < deadline:
                _t.sleep(0.05)
        pipeline.run_session(session, iter(source), sink, realtime=args.pace)
    finally:
        if out_fh:
            out_fh.close()
        if server:
            if args.linger:
                import time as _t

                _t.sleep(args.linger)
            server.close()
    events = session.series.events
    print(f"processed {len(source)} frames, {len(events)} raise events, "
          f"indicator {session.series.state}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    source = load_frames(args.frames_dir, fps=args.fps)
    truth_labels, _, _ = synth.load_truth(args.truth)
    session = _make_session(args, source)
    pred = []
    raw = []
    for frame in iter(source):
        event = session.process_frame(frame)
        pred.append(event.gesture)
        raw.append(session.last_classification)
    session.close()
    if len(truth_labels) != len(pred):
        raise FrameIOError(
            f"truth has {len(truth_labels)} rows but {len(pred)} frames were processed"
        )

    report_lines = ["class\ttp\tfp\tfn\trecall_pct\tprecision_pct"]
    roc_lines = ["class\tthreshold\ttpr\tfpr"]
    for positive in cpdh.LABELS:
        rep = metrics.evaluate(pred, truth_labels, positive)
        fmt = lambda v: "-" if v is None else f"{v}"
        report_lines.append(
            f"{positive}\t{rep.tp}\t{rep.fp}\t{rep.fn}\t{fmt(rep.recall_pct)}\t{fmt(rep.precision_pct)}"
        )
        scored = []
        for cls, t in zip(raw, truth_labels):
            if cls is not None and cls[0] == positive:
                scored.append((cls[1], t == positive))
            else:
                scored.append((math.inf, t == positive))
        pos = sum(1 for _, p in scored if p)
        if 0 < pos < len(scored):
            for tau, tpr, fpr in metrics.roc_points(scored, metrics.roc_thresholds(scored)):
                roc_lines.append(f"{positive}\t{tau}\t{tpr}\t{fpr}")
    Path(args.report).write_text("\n".join(report_lines) + "\n", encoding="utf-8")
    Path(args.roc).write_text("\n".join(roc_lines) + "\n", encoding="utf-8")
    print(f"wrote {args.report} and {args.roc}")
    return 0


def cmd_gen_synth(args) -> int:
    spec = synth.parse_scenario_file(args.spec)
    out = synth.gen_synthetic(spec, args.seed, args.out)
    print(f"rendered {spec.duration} frames at {spec.width}x{spec.height} -> {out}")
    return 0


def cmd_bench(args) -> int:
    from . import bench

    w, h = (int(v) for v in args.size.split("x"))
    print(f"active backend: {kernels.backend_name()}; "
          f"available: {', '.join(sorted(kernels.available()))}")
    print(bench.format_report(w, h, frames=args.frames, repeats=args.repeats))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="handwatch",
                                 description="hand gesture participation monitor")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-bg", help="train the codebook background model")
    p.add_argument("frames_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument("--eps-train", type=float, default=10.0)
    p.add_argument("--eps-detect", type=float, default=12.0)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--beta", type=float, default=1.3)
    p.add_argument("--mnrl-frac", type=float, default=0.5)
    p.set_defaults(fn=cmd_train_bg)

    p = sub.add_parser("build-db", help="build the CPDH gesture database from mask images")
    p.add_argument("masks_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--u", type=int, default=5)
    p.add_argument("--v", type=int, default=12)
    p.set_defaults(fn=cmd_build_db)

    p = sub.add_parser("run", help="run the pipeline over a frame directory")
    p.add_argument("frames_dir")
    p.add_argument("--bg", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--listen", type=str, default=None, help="host:port to serve the stream")
    p.add_argument("--out", type=str, default=None, help="write events to this ndjson file")
    p.add_argument("--learner", type=str, default="L1")
    p.add_argument("--pace", action="store_true", help="replay at real-time fps")
    p.add_argument("--wait-client", type=float, default=0.0,
                   help="wait up to N seconds for a stream client before starting")
    p.add_argument("--linger", type=float, default=0.0,
                   help="keep the stream open N seconds after the last frame")
    _add_run_config_args(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="evaluate per-frame predictions against ground truth")
    p.add_argument("frames_dir")
    p.add_argument("--truth", required=True)
    p.add_argument("--bg", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--roc", required=True)
    _add_run_config_args(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("gen-synth", help="render a synthetic scenario")
    p.add_argument("spec")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--size", type=str, default="320x240")
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (FrameIOError, synth.ScenarioError, background.TrainingError,
            skintrack.CascadeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
