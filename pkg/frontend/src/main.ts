import { SessionClient } from "./client.js";
import { bindControls, type ControlsHandle } from "./controls.js";
import { render, setConnected, setStale, type ViewElements } from "./view.js";
import type { SessionConfigBody, Snapshot } from "./types.js";

export interface App {
  client: SessionClient;
  sessionId: string;
  els: ViewElements & {
    clickBtn: HTMLButtonElement;
    pauseBtn: HTMLButtonElement;
    resumeBtn: HTMLButtonElement;
    resetBtn: HTMLButtonElement;
    toast: HTMLElement;
  };
  lastSnapshot(): Snapshot | null;
  dispose(): void;
}

function build(doc: Document): App["els"] {
  const root = doc.createElement("div");
  root.id = "app";
  root.innerHTML = `
    <div id="banner" hidden>disconnected, retrying…</div>
    <div id="stale" hidden>stale</div>
    <header>
      <span id="phase" class="badge"></span>
      episode <strong id="episode">–</strong>,
      step <strong id="step">–</strong>
      (<span id="total-steps">0</span> total)
    </header>
    <canvas id="world" width="360" height="360"></canvas>
    <div id="rewards"></div>
    <div id="sparkline"></div>
    <div class="controls">
      <button id="click-btn" class="click-btn">CLICK (space)</button>
      <button id="pause-btn">pause</button>
      <button id="resume-btn">resume</button>
      <button id="reset-btn">reset</button>
    </div>
    <div id="toast" hidden></div>
  `;
  doc.body.appendChild(root);
  const get = <T extends HTMLElement>(id: string) => doc.getElementById(id) as T;
  return {
    canvas: get<HTMLCanvasElement>("world"),
    phase: get("phase"),
    episode: get("episode"),
    step: get("step"),
    totalSteps: get("total-steps"),
    rewards: get("rewards"),
    sparkline: get("sparkline"),
    stale: get("stale"),
    banner: get("banner"),
    clickBtn: get<HTMLButtonElement>("click-btn"),
    pauseBtn: get<HTMLButtonElement>("pause-btn"),
    resumeBtn: get<HTMLButtonElement>("resume-btn"),
    resetBtn: get<HTMLButtonElement>("reset-btn"),
    toast: get("toast"),
  };
}

/**
 * Boot the UI against a service: join the session named in the location
 * hash, or create a fresh one and record it there (a page refresh then
 * rejoins instead of spawning another session).
 */
export async function createApp(
  doc: Document,
  base = "",
  config: SessionConfigBody = {},
): Promise<App> {
  const client = new SessionClient(base);
  const view = doc.defaultView;
  let sessionId = view?.location.hash.replace(/^#/, "") || "";
  if (!sessionId) {
    sessionId = await client.createSession(config);
    if (view) view.location.hash = sessionId;
  }

  const els = build(doc);
  const controls: ControlsHandle = bindControls(client, sessionId, els, doc);

  let last: Snapshot | null = null;
  let lastEventAt = Date.now();
  const stop = client.events(
    sessionId,
    (snap) => {
      last = snap;
      lastEventAt = Date.now();
      controls.setPeriod(snap.step_period_s * 1000);
      render(snap, els);
      setStale(els, false);
    },
    (connected) => {
      setConnected(els, connected);
      controls.setEnabled(connected);
    },
  );

  const staleTimer = setInterval(() => {
    if (!last || last.phase === "paused" || last.batch) return;
    setStale(els, Date.now() - lastEventAt > 2 * last.step_period_s * 1000);
  }, 250);

  return {
    client,
    sessionId,
    els,
    lastSnapshot: () => last,
    dispose() {
      clearInterval(staleTimer);
      stop();
      controls.dispose();
    },
  };
}

// Browser entry point: boot against the page's own origin.
declare const process: unknown;
if (typeof document !== "undefined" && typeof process === "undefined") {
  void createApp(document, "");
}
