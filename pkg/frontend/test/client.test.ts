import { createServer, type Server } from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { connectStream } from "../src/client.js";

function listen(server: Server): Promise<number> {
  return new Promise((resolve) => {
    server.listen(0, "127.0.0.1", () => {
      const addr = server.address();
      resolve(typeof addr === "object" && addr ? addr.port : 0);
    });
  });
}

const cleanups: Array<() => void> = [];
afterEach(() => {
  while (cleanups.length) cleanups.pop()!();
});

describe("stream client", () => {
  it("receives chunked lines and reports connection states", async () => {
    const server = createServer((_req, res) => {
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      res.write('{"a":1}\n{"a":2}\n');
      setTimeout(() => {
        res.write('{"a":3}\n');
        res.end();
        server.close();
      }, 30);
    });
    const port = await listen(server);
    const lines: string[] = [];
    const states: string[] = [];
    const stop = connectStream(
      `http://127.0.0.1:${port}/`,
      {
        onLine: (l) => lines.push(l),
        onConnection: (s) => states.push(s),
      },
      { initialBackoffMs: 50, maxBackoffMs: 100 },
    );
    cleanups.push(stop);
    await new Promise((r) => setTimeout(r, 200));
    stop();
    expect(lines).toEqual(['{"a":1}', '{"a":2}', '{"a":3}']);
    expect(states.slice(0, 2)).toEqual(["connecting", "live"]);
    expect(states).toContain("lost");
  });

  it("reconnects with backoff after the stream ends", async () => {
    let connections = 0;
    const server = createServer((_req, res) => {
      connections += 1;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      res.end(`{"conn":${connections}}\n`);
    });
    const port = await listen(server);
    const lines: string[] = [];
    const stop = connectStream(
      `http://127.0.0.1:${port}/`,
      { onLine: (l) => lines.push(l), onConnection: () => {} },
      { initialBackoffMs: 20, maxBackoffMs: 40 },
    );
    cleanups.push(stop);
    await new Promise((r) => setTimeout(r, 400));
    stop();
    server.close();
    expect(connections).toBeGreaterThanOrEqual(3);
    expect(lines.slice(0, 3)).toEqual(['{"conn":1}', '{"conn":2}', '{"conn":3}']);
  });

  it("stop() prevents further reconnects", async () => {
    let connections = 0;
    const server = createServer((_req, res) => {
      connections += 1;
      res.writeHead(200);
      res.end("x\n");
    });
    const port = await listen(server);
    const stop = connectStream(
      `http://127.0.0.1:${port}/`,
      { onLine: () => {}, onConnection: () => {} },
      { initialBackoffMs: 20 },
    );
    await new Promise((r) => setTimeout(r, 60));
    stop();
    const seen = connections;
    await new Promise((r) => setTimeout(r, 150));
    server.close();
    expect(connections).toBe(seen);
  });
});
