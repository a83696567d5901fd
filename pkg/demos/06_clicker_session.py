#!/usr/bin/env python3
"""Drive a batch-mode clicker-training session through the web endpoints.

A scripted "trainer" clicks whenever a step moved the effector toward the
object or the object toward the goal; the context the model sees keeps
equal numbers of unrewarded and rewarded tuples, zeros first.
"""

import math

from fastapi.testclient import TestClient

from seqpat.service import create_app

client = TestClient(create_app())
sid = client.post("/sessions", json={
    "batch": True, "seed": 23, "episode_len": 15, "warmup_episodes": 2,
    "model": {"kind": "random_policy", "seed": 23},
}).json()["id"]
client.post(f"/sessions/{sid}/resume")
print("session", sid)

prev = client.get(f"/sessions/{sid}/state").json()
for step in range(5 * 15):
    snap = client.post(f"/sessions/{sid}/step").json()
    w_prev, w = prev["world"], snap["world"]
    helped = (
        math.dist(w["effector"], w["object"]) < math.dist(w_prev["effector"], w_prev["object"])
        or math.dist(w["object"], w["goal"]) < math.dist(w_prev["object"], w_prev["goal"])
    )
    if helped:
        client.post(f"/sessions/{sid}/click")
    prev = snap

snap = client.get(f"/sessions/{sid}/state").json()
print(f"after {snap['total_steps']} steps / {snap['episode']} episodes:")
print("  labeled tuples:", snap["history"])
print("  clicks per episode:", snap["episode_clicks"])
print("  context the model saw last:")
for line in (snap["last_prompt"] or "(warmup: none)").split("\n"):
    print("   ", line)
