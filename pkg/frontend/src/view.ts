import type { Snapshot } from "./types.js";

export interface ViewElements {
  canvas: HTMLCanvasElement;
  phase: HTMLElement;
  episode: HTMLElement;
  step: HTMLElement;
  totalSteps: HTMLElement;
  rewards: HTMLElement;
  sparkline: HTMLElement;
  stale: HTMLElement;
  banner: HTMLElement;
}

const PHASE_LABELS: Record<string, string> = {
  random_warmup: "exploring",
  model_driven: "model",
  paused: "paused",
  done: "done",
};

function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext("2d");
  } catch {
    return null; // headless DOM without canvas support
  }
}

/** Top-down projection: x/y to canvas coordinates, z shown as marker size. */
function drawWorld(canvas: HTMLCanvasElement, snap: Snapshot): void {
  const ctx = context2d(canvas);
  if (!ctx) return;
  const [lo, hi] = snap.world.bounds;
  const sx = (v: number) => ((v - lo) / (hi - lo)) * canvas.width;
  const sy = (v: number) => canvas.height - ((v - lo) / (hi - lo)) * canvas.height;
  const size = (z: number) => 4 + 10 * ((z - lo) / (hi - lo));

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#10141f";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const goal = snap.world.goal;
  ctx.strokeStyle = "#2bbf6a";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.arc(sx(goal[0]), sy(goal[1]), (snap.world.goal_radius / (hi - lo)) * canvas.width, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);

  const obj = snap.world.object;
  ctx.fillStyle = "#eec643";
  ctx.beginPath();
  ctx.arc(sx(obj[0]), sy(obj[1]), size(obj[2]), 0, 2 * Math.PI);
  ctx.fill();

  const eff = snap.world.effector;
  ctx.fillStyle = "#5aa7ff";
  ctx.beginPath();
  ctx.arc(sx(eff[0]), sy(eff[1]), size(eff[2]), 0, 2 * Math.PI);
  ctx.fill();
}

function drawSparkline(el: HTMLElement, clicks: number[]): void {
  el.textContent = "";
  const peak = Math.max(1, ...clicks);
  for (const count of clicks) {
    const bar = el.ownerDocument.createElement("span");
    bar.className = "bar";
    bar.style.height = `${4 + (count / peak) * 20}px`;
    bar.title = `${count} rewards`;
    el.appendChild(bar);
  }
}

/** Mirror one server snapshot into the DOM; no client-side simulation. */
export function render(snap: Snapshot, els: ViewElements): void {
  els.phase.textContent = PHASE_LABELS[snap.phase] ?? snap.phase;
  els.phase.dataset.phase = snap.phase;
  els.episode.textContent = String(snap.episode);
  els.step.textContent = `${snap.step}/${snap.episode_len}`;
  els.totalSteps.textContent = String(snap.total_steps);
  els.rewards.textContent = `${snap.history.count1} rewarded / ${snap.history.count0} plain`;
  drawSparkline(els.sparkline, snap.episode_clicks);
  drawWorld(els.canvas, snap);
}

export function setStale(els: ViewElements, stale: boolean): void {
  els.stale.hidden = !stale;
}

export function setConnected(els: ViewElements, connected: boolean): void {
  els.banner.hidden = connected;
}
