"""Web service for live clicker-training sessions over the pushing world.

Sessions pair a PushWorld with the clicker context builder: at every step
boundary the previously executed (observation, action) tuple is labeled
with reward 1 if a click arrived during that step (else 0), appended to
history, and the next action is requested from the model. Live sessions
advance on a wall clock; batch sessions advance only on POST .../step,
which makes integration tests deterministic.
"""

from __future__ import annotations

import json
import queue
import random
import re
import secrets
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import improve
from .environments import PushWorld
from .errors import ConfigError
from .models import CompletionRequest, ModelSpec, complete


class SessionConfig(BaseModel):
    model: dict = Field(default_factory=lambda: {"kind": "random_policy"})
    step_period_s: float = Field(default=2.0, gt=0.0)
    episode_len: int = Field(default=15, ge=1)
    warmup_episodes: int = Field(default=2, ge=0)
    batch: bool = False
    seed: int = 0
    token_budget: int = Field(default=1024, ge=1)
    retries_per_action: int = Field(default=2, ge=0)
    max_episodes: int = Field(default=0, ge=0)  # 0 = unlimited


def parse_clicker_action(text: str) -> Optional[list[int]]:
    """Exactly three integers in 0-100 from the completion's first line."""
    values = [int(v) for v in re.findall(r"-?\d+", text.split("\n")[0])]
    if len(values) != 3 or any(not 0 <= v <= 100 for v in values):
        return None
    return values


@dataclass
class Session:
    id: str
    config: SessionConfig
    world: PushWorld = field(default_factory=PushWorld)
    model: object = None
    rng: random.Random = field(default_factory=random.Random)
    history: list = field(default_factory=list)  # (reward, obs, action)
    episode: int = 1
    step_in_episode: int = 0
    total_steps: int = 0
    running: bool = False
    pending_click: bool = False
    pending_tuple: Optional[tuple] = None  # (obs, action) awaiting its label
    last_action: Optional[list[int]] = None
    last_prompt: str = ""
    episode_clicks: list[int] = field(default_factory=lambda: [0])
    fallback_count: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list = field(default_factory=list)
    _clock: Optional[threading.Thread] = None

    @property
    def phase(self) -> str:
        if self.config.max_episodes and self.episode > self.config.max_episodes:
            return "done"
        if not self.running:
            return "paused"
        if self.episode <= self.config.warmup_episodes:
            return "random_warmup"
        return "model_driven"

    def snapshot(self) -> dict:
        count0 = sum(1 for r, _, _ in self.history if r == 0)
        count1 = len(self.history) - count0
        return {
            "id": self.id,
            "phase": self.phase,
            "episode": self.episode,
            "step": self.step_in_episode,
            "total_steps": self.total_steps,
            "episode_len": self.config.episode_len,
            "step_period_s": self.config.step_period_s,
            "batch": self.config.batch,
            "world": {
                "effector": self.world.obs[:3],
                "object": self.world.obs[3:],
                "goal": [round(v) for v in self.world.goal],
                "goal_radius": self.world.goal_radius,
                "bounds": list(self.world.BOUNDS),
            },
            "last_action": self.last_action,
            "history": {"count0": count0, "count1": count1},
            "episode_clicks": list(self.episode_clicks),
            "fallback_count": self.fallback_count,
            "last_prompt": self.last_prompt,
        }

    def publish(self) -> None:
        snap = self.snapshot()
        for q in list(self.subscribers):
            q.put(snap)

    def _label_pending(self) -> None:
        if self.pending_tuple is not None:
            obs, action = self.pending_tuple
            reward = 1 if self.pending_click else 0
            self.history.append((reward, obs, action))
            self.episode_clicks[-1] += reward
            self.pending_tuple = None
        self.pending_click = False

    def _choose_action(self) -> list[int]:
        if self.phase != "model_driven":
            return [self.rng.randint(0, 100) for _ in range(3)]
        prompt = improve.clicker_build_context(
            self.history, self.world.obs, budget=self.config.token_budget
        )
        self.last_prompt = prompt
        request = CompletionRequest(prompt=prompt, max_tokens=16, stop=("\n",))
        for _ in range(1 + self.config.retries_per_action):
            try:
                action = parse_clicker_action(complete(self.model, request))
            except Exception:
                break
            if action is not None:
                return action
        self.fallback_count += 1
        return [self.rng.randint(0, 100) for _ in range(3)]

    def advance(self) -> None:
        """One step boundary: label the executed tuple, maybe reset, act."""
        with self.lock:
            if self.phase == "done":
                return
            self._label_pending()
            if self.step_in_episode >= self.config.episode_len:
                self.episode += 1
                self.step_in_episode = 0
                self.episode_clicks.append(0)
                self.world.reset(seed=self.rng.randrange(2**32))
                if self.phase == "done":
                    self.publish()
                    return
            obs_before = self.world.obs
            action = self._choose_action()
            self.world.step(action)
            self.pending_tuple = (obs_before, action)
            self.last_action = action
            self.step_in_episode += 1
            self.total_steps += 1
        self.publish()

    def click(self) -> None:
        with self.lock:
            self.pending_click = True
        self.publish()

    def start_clock(self) -> None:
        if self.config.batch or (self._clock and self._clock.is_alive()):
            return

        def run():
            import time

            while self.running:
                time.sleep(self.config.step_period_s)
                if self.running:
                    self.advance()

        self._clock = threading.Thread(target=run, daemon=True)
        self._clock.start()

    def reset(self) -> None:
        with self.lock:
            self.running = False
            self.history.clear()
            self.episode = 1
            self.step_in_episode = 0
            self.total_steps = 0
            self.pending_click = False
            self.pending_tuple = None
            self.last_action = None
            self.last_prompt = ""
            self.episode_clicks = [0]
            self.fallback_count = 0
            self.rng = random.Random(self.config.seed)
            self.world.reset(seed=self.rng.randrange(2**32))
        self.publish()


def create_app(static_dir=None) -> FastAPI:
    app = FastAPI(title="seqpat clicker service")
    sessions: dict[str, Session] = {}

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.post("/sessions")
    def create_session(config: SessionConfig):
        try:
            model = ModelSpec(**config.model).build()
        except (ConfigError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"model: {exc}") from None
        session = Session(id=secrets.token_urlsafe(16), config=config, model=model)
        session.rng = random.Random(config.seed)
        session.world.reset(seed=session.rng.randrange(2**32))
        sessions[session.id] = session
        return {"id": session.id}

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        return get_session(session_id).snapshot()

    @app.post("/sessions/{session_id}/click")
    def click(session_id: str):
        session = get_session(session_id)
        if not session.running:
            raise HTTPException(status_code=409, detail="session is paused")
        session.click()
        return {"ok": True}

    @app.post("/sessions/{session_id}/pause")
    def pause(session_id: str):
        session = get_session(session_id)
        session.running = False
        session.publish()
        return {"ok": True}

    @app.post("/sessions/{session_id}/resume")
    def resume(session_id: str):
        session = get_session(session_id)
        if session.phase == "done":
            raise HTTPException(status_code=409, detail="session is done")
        session.running = True
        session.start_clock()
        session.publish()
        return {"ok": True}

    @app.post("/sessions/{session_id}/reset")
    def reset(session_id: str):
        get_session(session_id).reset()
        return {"ok": True}

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str):
        session = get_session(session_id)
        if not session.config.batch:
            raise HTTPException(status_code=409, detail="step is batch-mode only")
        if not session.running:
            raise HTTPException(status_code=409, detail="session is paused")
        session.advance()
        return session.snapshot()

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        session = get_session(session_id)
        q: queue.Queue = queue.Queue()
        session.subscribers.append(q)
        q.put(session.snapshot())

        def stream():
            try:
                while True:
                    try:
                        snap = q.get(timeout=30.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(snap)}\n\n"
            finally:
                if q in session.subscribers:
                    session.subscribers.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    @app.get("/", response_class=HTMLResponse)
    def index():
        return (
            "<html><body><h3>seqpat clicker service</h3>"
            "<p>POST /sessions to start; UI at /ui when static assets are mounted.</p>"
            "</body></html>"
        )

    return app


def main(argv=None):
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="run the clicker-training service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8710)
    parser.add_argument("--static-dir", default=None, help="directory of built UI assets")
    args = parser.parse_args(argv)
    uvicorn.run(create_app(static_dir=args.static_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
