import type { SessionConfigBody, Snapshot } from "./types.js";

/** Thin wrapper over the clicker-service endpoints; one method = one call. */
export class SessionClient {
  constructor(public base: string = "") {}

  private async post(path: string, body?: unknown): Promise<Response> {
    return fetch(this.base + path, {
      method: "POST",
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  async createSession(config: SessionConfigBody = {}): Promise<string> {
    const res = await this.post("/sessions", config);
    if (!res.ok) throw new Error(`create failed: ${res.status}`);
    return (await res.json()).id as string;
  }

  async state(id: string): Promise<Snapshot> {
    const res = await fetch(`${this.base}/sessions/${id}/state`);
    if (!res.ok) throw new Error(`state failed: ${res.status}`);
    return (await res.json()) as Snapshot;
  }

  /** Returns false when the service rejected the click (e.g. paused). */
  async click(id: string): Promise<boolean> {
    return (await this.post(`/sessions/${id}/click`)).ok;
  }

  async pause(id: string): Promise<void> {
    await this.post(`/sessions/${id}/pause`);
  }

  async resume(id: string): Promise<void> {
    await this.post(`/sessions/${id}/resume`);
  }

  async reset(id: string): Promise<void> {
    await this.post(`/sessions/${id}/reset`);
  }

  async step(id: string): Promise<void> {
    await this.post(`/sessions/${id}/step`);
  }

  /**
   * Consume the server-sent snapshot stream with automatic reconnect and
   * exponential backoff. Implemented over fetch streaming (works both in
   * browsers and in headless DOM environments without EventSource).
   * Returns a function that stops the stream.
   */
  events(
    id: string,
    onSnapshot: (snap: Snapshot) => void,
    onStatus?: (connected: boolean) => void,
  ): () => void {
    let stopped = false;
    let controller = new AbortController();

    const run = async () => {
      let backoff = 500;
      while (!stopped) {
        try {
          const res = await fetch(`${this.base}/sessions/${id}/events`, {
            signal: controller.signal,
          });
          if (!res.ok || !res.body) throw new Error(`events: ${res.status}`);
          onStatus?.(true);
          backoff = 500;
          const reader = res.body.getReader();
          const decoder = new TextDecoder();
          let buffer = "";
          for (;;) {
            const { done, value } = await reader.read();
            if (done) break;
            buffer += decoder.decode(value, { stream: true });
            let cut;
            while ((cut = buffer.indexOf("\n\n")) >= 0) {
              const event = buffer.slice(0, cut);
              buffer = buffer.slice(cut + 2);
              for (const line of event.split("\n")) {
                if (line.startsWith("data: ")) {
                  onSnapshot(JSON.parse(line.slice(6)) as Snapshot);
                }
              }
            }
          }
        } catch {
          // fall through to reconnect
        }
        if (stopped) return;
        onStatus?.(false);
        await new Promise((r) => setTimeout(r, backoff));
        backoff = Math.min(backoff * 2, 8000);
        controller = new AbortController();
      }
    };
    void run();
    return () => {
      stopped = true;
      controller.abort();
    };
  }
}
