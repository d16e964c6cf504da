import json

import numpy as np
import pytest

from handwatch import synth
from handwatch.cli import main
from handwatch.frameio import write_pnm

SCENE = """
duration = {duration}
width = 96
height = 72
fps = 10
background = flat
noise_amp = 4
{events}
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "train.cfg").write_text(SCENE.format(duration=30, events=""))
    (root / "run.cfg").write_text(
        SCENE.format(duration=40, events="event = palm 10 30 static 48 34 0.62 20")
    )
    assert main(["gen-synth", str(root / "train.cfg"), "--seed", "5", "--out", str(root / "train")]) == 0
    assert main(["gen-synth", str(root / "run.cfg"), "--seed", "5", "--out", str(root / "run")]) == 0

    masks = root / "masks"
    masks.mkdir()
    rng = np.random.default_rng(2)
    for i in range(8):
        shape = "palm" if i % 2 == 0 else "fist"
        m = synth.render_hand(shape, 0.5 + 0.05 * i, (48, 36), (96, 72), rng)
        write_pnm(masks / f"{shape}_{i:03d}.pgm", m.astype(np.uint8) * 255)

    assert main(["train-bg", str(root / "train"), "--out", str(root / "bg.cbk")]) == 0
    assert main(["build-db", str(masks), "--out", str(root / "db.cpdh")]) == 0
    return root


def test_train_bg_writes_model(workdir):
    assert (workdir / "bg.cbk").stat().st_size > 0


def test_build_db_writes_db(workdir):
    head = (workdir / "db.cpdh").read_text().splitlines()[0]
    assert head.startswith("CPDH1 5 12 100 ")


def test_run_writes_ndjson(workdir):
    out = workdir / "events.ndjson"
    rc = main([
        "run", str(workdir / "run"), "--bg", str(workdir / "bg.cbk"),
        "--db", str(workdir / "db.cpdh"), "--out", str(out),
        "--skin-hue", "20", "--min-area", "80",
        "--window-w", "4", "--red-threshold", "5", "--grace", "2",
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 44  # 40 gesture records + 4 indicator samples
    kinds = [json.loads(l)["kind"] for l in lines]
    assert kinds.count("gesture") == 40
    assert kinds.count("indicator") == 4
    gestures = [json.loads(l)["gesture"] for l in lines if json.loads(l)["kind"] == "gesture"]
    assert "palm" in gestures


def test_run_deterministic(workdir):
    args = [
        "run", str(workdir / "run"), "--bg", str(workdir / "bg.cbk"),
        "--db", str(workdir / "db.cpdh"), "--skin-hue", "20", "--min-area", "80",
    ]
    a = workdir / "a.ndjson"
    b = workdir / "b.ndjson"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_eval_writes_reports(workdir):
    rep = workdir / "report.tsv"
    roc = workdir / "roc.tsv"
    rc = main([
        "eval", str(workdir / "run"), "--truth", str(workdir / "run" / "truth.tsv"),
        "--bg", str(workdir / "bg.cbk"), "--db", str(workdir / "db.cpdh"),
        "--report", str(rep), "--roc", str(roc),
        "--skin-hue", "20", "--min-area", "80",
    ])
    assert rc == 0
    rep_lines = rep.read_text().splitlines()
    assert rep_lines[0] == "class\ttp\tfp\tfn\trecall_pct\tprecision_pct"
    by_class = {l.split("\t")[0]: l.split("\t") for l in rep_lines[1:]}
    assert set(by_class) == {"palm", "fist"}
    palm_tp = int(by_class["palm"][1])
    assert palm_tp >= 17  # 21 palm frames in truth; most must be found
    roc_lines = roc.read_text().splitlines()
    assert roc_lines[0] == "class\tthreshold\ttpr\tfpr"
    assert len(roc_lines) > 2


def test_run_serves_stream(workdir):
    import http.client
    import threading
    import time

    out = []

    def go():
        rc = main([
            "run", str(workdir / "run"), "--bg", str(workdir / "bg.cbk"),
            "--db", str(workdir / "db.cpdh"), "--skin-hue", "20", "--min-area", "80",
            "--listen", "127.0.0.1:38471", "--wait-client", "5", "--linger", "0.5",
        ])
        out.append(rc)

    t = threading.Thread(target=go)
    t.start()
    lines = []
    deadline = time.monotonic() + 10.0
    conn = None
    while time.monotonic() < deadline and conn is None:
        try:
            conn = http.client.HTTPConnection("127.0.0.1", 38471, timeout=5.0)
            conn.request("GET", "/stream")
        except OSError:
            conn = None
            time.sleep(0.1)
    assert conn is not None
    resp = conn.getresponse()
    buf = b""
    while time.monotonic() < deadline:
        chunk = resp.read1(65536)
        if not chunk:
            break
        buf += chunk
    conn.close()
    t.join(timeout=20.0)
    lines = [l for l in buf.decode("utf-8").splitlines() if l.strip()]
    assert out == [0]
    assert len(lines) == 44
    assert all(json.loads(l)["kind"] in ("gesture", "indicator") for l in lines)


def test_missing_frames_dir_errors(tmp_path):
    assert main(["train-bg", str(tmp_path), "--out", str(tmp_path / "x.cbk")]) == 2
