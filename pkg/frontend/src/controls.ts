import type { SessionClient } from "./client.js";

export interface ControlElements {
  clickBtn: HTMLButtonElement;
  pauseBtn: HTMLButtonElement;
  resumeBtn: HTMLButtonElement;
  resetBtn: HTMLButtonElement;
  toast: HTMLElement;
}

export interface ControlsHandle {
  setEnabled(enabled: boolean): void;
  /** Current debounce window in ms; follows the session's step period. */
  setPeriod(periodMs: number): void;
  dispose(): void;
}

/**
 * Wire the CLICK button (and spacebar) plus the session controls. Clicks
 * are debounced to at most one request per step period; every other
 * control maps to exactly one endpoint call.
 */
export function bindControls(
  client: SessionClient,
  sessionId: string,
  els: ControlElements,
  doc: Document,
): ControlsHandle {
  let periodMs = 2000;
  let lastClickAt = -Infinity;

  const toast = (message: string) => {
    els.toast.textContent = message;
    els.toast.hidden = false;
    setTimeout(() => (els.toast.hidden = true), 1500);
  };

  const sendClick = async () => {
    const now = Date.now();
    if (now - lastClickAt < periodMs) return; // debounce: one per step period
    lastClickAt = now;
    const accepted = await client.click(sessionId);
    if (!accepted) toast("click rejected (paused?)");
  };

  const onKey = (event: KeyboardEvent) => {
    if (event.code === "Space" || event.key === " ") {
      event.preventDefault();
      if (!els.clickBtn.disabled) void sendClick();
    }
  };

  els.clickBtn.addEventListener("click", () => void sendClick());
  doc.addEventListener("keydown", onKey);
  els.pauseBtn.addEventListener("click", () => void client.pause(sessionId));
  els.resumeBtn.addEventListener("click", () => void client.resume(sessionId));
  els.resetBtn.addEventListener("click", () => {
    const view = doc.defaultView;
    if (!view || view.confirm("Reset the session? History will be cleared.")) {
      void client.reset(sessionId);
    }
  });

  const buttons = [els.clickBtn, els.pauseBtn, els.resumeBtn, els.resetBtn];
  return {
    setEnabled(enabled: boolean) {
      for (const b of buttons) b.disabled = !enabled;
    },
    setPeriod(ms: number) {
      periodMs = ms;
    },
    dispose() {
      doc.removeEventListener("keydown", onKey);
    },
  };
}
