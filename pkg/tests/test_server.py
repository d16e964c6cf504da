import http.client
import threading
import time

from handwatch.server import LineStreamServer


def _read_lines(host, port, want, timeout=5.0):
    conn = http.client.HTTPConnection(host, port, timeout=timeout)
    conn.request("GET", "/")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.getheader("Transfer-Encoding") == "chunked"
    got = []
    buf = b""
    deadline = time.monotonic() + timeout
    while len(got) < want and time.monotonic() < deadline:
        chunk = resp.read1(4096)
        if not chunk:
            break
        buf += chunk
        while b"\n" in buf:
            line, buf = buf.split(b"\n", 1)
            got.append(line.decode("utf-8"))
    conn.close()
    return got


def test_broadcast_reaches_client():
    srv = LineStreamServer("127.0.0.1", 0)
    host, port = srv.address
    result = {}

    def client():
        result["lines"] = _read_lines(host, port, 3)

    t = threading.Thread(target=client)
    t.start()
    deadline = time.monotonic() + 5.0
    while srv.client_count() == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    assert srv.client_count() == 1
    for i in range(3):
        srv.broadcast(f'{{"t":{i},"kind":"gesture"}}\n')
    t.join(timeout=5.0)
    srv.close()
    assert result["lines"] == [
        '{"t":0,"kind":"gesture"}',
        '{"t":1,"kind":"gesture"}',
        '{"t":2,"kind":"gesture"}',
    ]


def test_order_preserved_for_multiple_clients():
    srv = LineStreamServer("127.0.0.1", 0)
    host, port = srv.address
    results = {}

    def client(key):
        results[key] = _read_lines(host, port, 10)

    threads = [threading.Thread(target=client, args=(i,)) for i in range(3)]
    for t in threads:
        t.start()
    deadline = time.monotonic() + 5.0
    while srv.client_count() < 3 and time.monotonic() < deadline:
        time.sleep(0.01)
    lines = [f'{{"seq":{i}}}\n' for i in range(10)]
    for line in lines:
        srv.broadcast(line)
    for t in threads:
        t.join(timeout=5.0)
    srv.close()
    for i in range(3):
        assert results[i] == [l.rstrip("\n") for l in lines]


def test_disconnected_client_is_dropped():
    srv = LineStreamServer("127.0.0.1", 0)
    host, port = srv.address
    conn = http.client.HTTPConnection(host, port, timeout=2.0)
    conn.request("GET", "/")
    conn.getresponse()
    deadline = time.monotonic() + 5.0
    while srv.client_count() == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    conn.close()
    for _ in range(20):
        srv.broadcast("x\n")
        time.sleep(0.005)
    assert srv.client_count() == 0
    srv.close()
