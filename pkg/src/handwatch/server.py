"""Minimal HTTP chunked line-stream broadcaster for the event wire.

Any GET gets a `200 OK` with Transfer-Encoding: chunked and then receives
every line pushed through :meth:`LineStreamServer.broadcast` until the
server closes. Works with curl, browser fetch(), and node fetch alike.
"""

from __future__ import annotations

import socket
import threading


class LineStreamServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.address = self._sock.getsockname()
        self._clients: list[socket.socket] = []
        self._lock = threading.Lock()
        self._closing = False
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    def _accept_loop(self):
        while not self._closing:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._handshake, args=(conn,), daemon=True).start()

    def _handshake(self, conn: socket.socket):
        try:
            conn.settimeout(5.0)
            buf = b""
            while b"\r\n\r\n" not in buf and b"\n\n" not in buf:
                chunk = conn.recv(4096)
                if not chunk:
                    conn.close()
                    return
                buf += chunk
                if len(buf) > 65536:
                    break
            conn.settimeout(None)
            conn.sendall(
                b"HTTP/1.1 200 OK\r\n"
                b"Content-Type: application/x-ndjson\r\n"
                b"Cache-Control: no-store\r\n"
                b"Access-Control-Allow-Origin: *\r\n"
                b"Transfer-Encoding: chunked\r\n"
                b"Connection: close\r\n\r\n"
            )
        except OSError:
            conn.close()
            return
        with self._lock:
            if self._closing:
                conn.close()
                return
            self._clients.append(conn)

    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def broadcast(self, line: str):
        """Send one wire line to every connected client as an HTTP chunk."""
        data = line.encode("utf-8")
        chunk = f"{len(data):x}\r\n".encode("ascii") + data + b"\r\n"
        with self._lock:
            alive = []
            for c in self._clients:
                try:
                    c.sendall(chunk)
                    alive.append(c)
                except OSError:
                    c.close()
            self._clients = alive

    def close(self):
        with self._lock:
            self._closing = True
            clients, self._clients = self._clients, []
        for c in clients:
            try:
                c.sendall(b"0\r\n\r\n")
            except OSError:
                pass
            c.close()
        try:
            self._sock.close()
        except OSError:
            pass
