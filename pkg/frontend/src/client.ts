// Line-stream client: fetch the NDJSON endpoint, split chunks into lines,
// hand each line to the consumer, and reconnect with capped exponential
// backoff when the stream drops. Resumes live (no replay protocol).

export interface ClientHooks {
  onLine: (line: string) => void;
  onConnection: (state: "connecting" | "live" | "lost") => void;
}

export interface ClientOptions {
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  fetchImpl?: typeof fetch;
}

export function connectStream(url: string, hooks: ClientHooks, opts: ClientOptions = {}) {
  const fetchImpl = opts.fetchImpl ?? fetch;
  const initial = opts.initialBackoffMs ?? 500;
  const max = opts.maxBackoffMs ?? 8000;
  let backoff = initial;
  let closed = false;
  let timer: ReturnType<typeof setTimeout> | null = null;

  async function consume(): Promise<void> {
    hooks.onConnection("connecting");
    const resp = await fetchImpl(url);
    if (!resp.ok || !resp.body) {
      throw new Error(`stream endpoint answered ${resp.status}`);
    }
    hooks.onConnection("live");
    backoff = initial; // successful connection resets the backoff
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buf = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buf += decoder.decode(value, { stream: true });
      let nl: number;
      while ((nl = buf.indexOf("\n")) >= 0) {
        const line = buf.slice(0, nl);
        buf = buf.slice(nl + 1);
        if (line.trim() !== "") hooks.onLine(line);
      }
    }
    if (buf.trim() !== "") hooks.onLine(buf);
  }

  function scheduleReconnect() {
    if (closed) return;
    hooks.onConnection("lost");
    timer = setTimeout(run, backoff);
    backoff = Math.min(backoff * 2, max);
  }

  function run() {
    if (closed) return;
    consume().then(scheduleReconnect, scheduleReconnect);
  }

  run();
  return () => {
    closed = true;
    if (timer) clearTimeout(timer);
  };
}
