"""Offline acceptance suite: one test per criterion, with its tolerance pinned.

Each test prints a single [PASS]/[FAIL] line with the measured values
(visible with `pytest -s` or on failure). Everything runs against the
deterministic local models; no network access is required.
"""

import json
import math
import random
import statistics
import time
from collections import Counter

import pytest

from seqpat import arc, codec, completion, environments as envs, improve, pcfg
from seqpat.cli import main as cli_main
from seqpat.models import CompletionRequest, PcfgSearchModel, RandomPolicyModel, complete


def check(name: str, ok: bool, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. Grammar-benchmark oracle closure over the full grid


def test_criterion_1_pcfg_oracle_closure():
    start = time.monotonic()
    tasks = pcfg.make_suite(n_per_cell=100, seed=0)
    cells = {(k, w) for k in pcfg.DEFAULT_K_SET for w in pcfg.DEFAULT_W_SET if w < k}
    assert {(t.k, t.w) for t in tasks} == cells
    assert len(tasks) == 100 * len(cells)
    report = pcfg.evaluate(pcfg.oracle_model(tasks), tasks)
    elapsed = time.monotonic() - start
    check(
        "criterion 1 (oracle closure, full grid)",
        report["accuracy"] == 1.0 and elapsed <= 300,
        f"accuracy {report['accuracy']:.3f} over {len(tasks)} tasks in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 2. Searcher completeness and query accuracy

SEARCH_CELLS = [(k, w) for k in (1, 2, 4, 8) for w in (0, 1, 3) if w < k]


@pytest.fixture(scope="module")
def search_predictions():
    """predict-with-search results for 100 seed-fixed tasks per searched cell."""
    start = time.monotonic()
    cells = {}
    for k, w in SEARCH_CELLS:
        tasks = pcfg.make_suite(k_set=(k,), w_set=(w,), n_per_cell=100, seed=0)
        predictions = [pcfg.predict_with_search(t, max_ops=3) for t in tasks]
        cells[(k, w)] = (tasks, predictions)
    return {"cells": cells, "elapsed": time.monotonic() - start}


def test_criterion_2_searcher_completeness(search_predictions):
    cells = search_predictions["cells"]
    solved = {
        cell: sum(p is not None for p in preds)
        for cell, (tasks, preds) in cells.items()
    }
    w0_correct = all(
        preds[i] == list(tasks[i].query[1])
        for (k, w), (tasks, preds) in cells.items()
        if w == 0
        for i in range(100)
    )
    elapsed = search_predictions["elapsed"]
    check(
        "criterion 2a (searcher completeness + w=0 accuracy)",
        all(v == 100 for v in solved.values()) and w0_correct and elapsed <= 600,
        f"solved per cell {sorted(solved.items())}, w=0 all-correct={w0_correct}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_2_query_accuracy_band(search_predictions):
    """The hardest searched cell is pinned to query accuracy in [70, 90].

    A complete first-consistent-program enumerator leaves ambiguity as the
    only error source, and that ambiguity is measured near zero here, so
    this band is not reachable without breaking completeness; the test
    states the requirement faithfully and reports the measured value.
    """
    tasks, preds = search_predictions["cells"][(8, 3)]
    accuracy = 100 * sum(
        p == list(t.query[1]) for t, p in zip(tasks, preds)
    ) / len(tasks)
    check(
        "criterion 2b (k=8, w=3 query accuracy in 80±10)",
        70 <= accuracy <= 90,
        f"measured {accuracy:.0f}% over {len(tasks)} tasks",
    )


# ---------------------------------------------------------------------------
# 3. Worked three-example swap-and-drop transformation


def test_criterion_3_worked_example():
    prompt = " 5 3 0, 3 5; 7 6 1, 6 7; 9 2 3, 2 9; 4 8 5,"
    model = PcfgSearchModel(max_ops=3)
    out = complete(model, CompletionRequest(prompt=prompt, max_tokens=16, stop=(";",)))
    check("criterion 3 (worked example completion)", out == " 8 4", f"completion {out!r}")


# ---------------------------------------------------------------------------
# 4. Grid-puzzle harness closure and token-mapping invariance

GRID_PROMPT_FIXTURE = (
    "input:\n0, 0, 0, 0\n0, 3, 4, 0\n0, 7, 6, 0\n0, 0, 0, 0\noutput:\n"
    "3, 0, 0, 4\n0, 0, 0, 4\n0, 0, 0, 0\n0, 0, 0, 0\n7, 0, 0, 6\n---\n"
    "input:\n0, 0, 0, 0\n0, 5, 6, 0\n0, 8, 3, 0\n0, 0, 0, 0\noutput:\n"
)


def test_criterion_4_arc_closure_and_invariance():
    suite = arc.default_suite()
    assert len(suite) == 800

    task = arc.ArcTask(
        id="fixture",
        train=[(
            [[0, 0, 0, 0], [0, 3, 4, 0], [0, 7, 6, 0], [0, 0, 0, 0]],
            [[3, 0, 0, 4], [0, 0, 0, 4], [0, 0, 0, 0], [0, 0, 0, 0], [7, 0, 0, 6]],
        )],
        test=[([[0, 0, 0, 0], [0, 5, 6, 0], [0, 8, 3, 0], [0, 0, 0, 0]], [[0]])],
    )
    fixture_ok = arc.build_prompt(task, 0) == GRID_PROMPT_FIXTURE

    plain = arc.run_eval(arc.oracle_model(suite), suite, parallelism=4)
    alphabet_solved = []
    pool = codec.bundled_pool()
    for seed in range(5):
        alphabet = codec.sample_alphabet(seed, pool)
        report = arc.run_eval(
            arc.oracle_model(suite, alphabet=alphabet), suite,
            alphabet=alphabet, parallelism=4, alphabet_seed=seed,
        )
        alphabet_solved.append(report["solved"])
    check(
        "criterion 4 (suite closure + prompt fixture + alphabet invariance)",
        fixture_ok and plain["solved"] == 800 and all(s == 800 for s in alphabet_solved),
        f"fixture={fixture_ok}, digits {plain['solved']}/800, "
        f"alphabets {alphabet_solved}",
    )


# ---------------------------------------------------------------------------
# 5. Alignment-distance oracle equivalence


def dtw_brute_force(a, b):
    """Exhaustive minimum over all monotone alignments (exponential oracle)."""
    n, m = len(a), len(b)
    best = [math.inf]

    def walk(i, j, total):
        total += abs(a[i] - b[j])
        if total >= best[0]:
            return
        if i == n - 1 and j == m - 1:
            best[0] = total
            return
        if i + 1 < n:
            walk(i + 1, j, total)
        if j + 1 < m:
            walk(i, j + 1, total)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, total)

    walk(0, 0, 0.0)
    return best[0]


def test_criterion_5_dtw_matches_exhaustive_oracle():
    rng = random.Random(55)
    mismatches = 0
    for _ in range(500):
        a = [rng.randint(0, 100) for _ in range(rng.randint(1, 6))]
        b = [rng.randint(0, 100) for _ in range(rng.randint(1, 6))]
        if completion.dtw(a, b) != dtw_brute_force(a, b):
            mismatches += 1
    check("criterion 5 (DTW vs exhaustive oracle)", mismatches == 0,
          f"{mismatches}/500 mismatches")


# ---------------------------------------------------------------------------
# 6. Period-repeat completion baseline


def test_criterion_6_period_repeat_baseline():
    from seqpat.models import PeriodRepeatModel

    means = {}
    for periods in (3, 5):
        spec = completion.FunctionSpec(family="sin", a=1.0, b=1.0, context_periods=periods)
        report = completion.run_function_suite(
            PeriodRepeatModel(period=spec.points_per_period), spec, trials=11, seed=0
        )
        means[periods] = report["mean_dtw_per_step"]
    check(
        "criterion 6 (period-repeat baseline)",
        means[3] <= 2.0 and means[5] <= 2.0 and means[5] <= means[3],
        f"per-step DTW: 3 periods {means[3]:.3f}, 5 periods {means[5]:.3f}",
    )


# ---------------------------------------------------------------------------
# 7. Grid environment rewards and greedy policy


def test_criterion_7_grid_environment():
    goals_seen = set()
    seed = 0
    all_ok = True
    while len(goals_seen) < 80:
        env = envs.GridEnv()
        env.reset(seed=seed)
        seed += 1
        if env.goal in goals_seen:
            continue
        goals_seen.add(env.goal)
        steps_to_goal = None
        steps = 0
        terminal = False
        while not terminal:
            _, terminal, reward = env.step(envs.greedy_grid_policy(env.obs, env.goal))
            steps += 1
            if tuple(env.obs) == env.goal and steps_to_goal is None:
                steps_to_goal = steps
        all_ok &= reward == 100 and steps_to_goal <= 16

    env = envs.GridEnv()
    env.reset(seed=0)
    env.goal = (0, 0)
    rewards = set()
    formula_ok = True
    for x in range(9):
        for y in range(9):
            env.agent = (x, y)
            expected = round(100 - 10 * math.sqrt(x * x + y * y))
            formula_ok &= env.reward() == expected
            rewards.add(env.reward())
    non_decade = [r for r in rewards if r % 10 != 0]
    check(
        "criterion 7 (grid rewards + greedy policy)",
        all_ok and formula_ok and len(non_decade) > 0,
        f"80 goals solved={all_ok}, formula exact={formula_ok}, "
        f"non-multiple-of-10 rewards e.g. {sorted(non_decade)[:4]}",
    )


# ---------------------------------------------------------------------------
# 8. Pole-balancing environment

# Frozen once from the independent oracle below (200 episodes, seeds 0..199).
CARTPOLE_RANDOM_MEAN_FIXTURE = 22.195


def oracle_cartpole_return(init_seed: int, action_seed: int) -> int:
    """Independent minimal simulation of the same dynamics (test-local oracle)."""
    rng = random.Random(init_seed)
    x, x_dot, theta, theta_dot = (rng.uniform(-0.05, 0.05) for _ in range(4))
    actions = random.Random(action_seed)
    theta_max = 12 * math.pi / 180
    steps = 0
    while steps < 200:
        force = -10.0 if actions.choice((1, 2)) == 1 else 10.0
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        temp = (force + 0.05 * theta_dot**2 * sin_t) / 1.1
        theta_acc = (9.8 * sin_t - cos_t * temp) / (
            0.5 * (4.0 / 3.0 - 0.1 * cos_t**2 / 1.1)
        )
        x_acc = temp - 0.05 * theta_acc * cos_t / 1.1
        x += 0.02 * x_dot
        x_dot += 0.02 * x_acc
        theta += 0.02 * theta_dot
        theta_dot += 0.02 * theta_acc
        steps += 1
        if abs(theta) > theta_max:
            break
    return steps


def test_criterion_8_cartpole():
    bang_bang_ok = True
    for seed in range(10):
        env = envs.CartPoleEnv()
        env.reset(seed=seed)
        terminal = False
        while not terminal:
            _, terminal, ret = env.step(envs.bang_bang_cartpole_policy(env.obs))
        bang_bang_ok &= ret == 200

    env = envs.CartPoleEnv()
    env.reset(seed=0)
    terminal = False
    while not terminal:
        _, terminal, constant_ret = env.step(1)

    env_returns = []
    for seed in range(200):
        env = envs.CartPoleEnv()
        env.reset(seed=seed)
        actions = random.Random(10_000 + seed)
        terminal = False
        while not terminal:
            _, terminal, ret = env.step(actions.choice((1, 2)))
        env_returns.append(ret)
    env_mean = statistics.mean(env_returns)
    oracle_mean = statistics.mean(
        oracle_cartpole_return(seed, 10_000 + seed) for seed in range(200)
    )
    check(
        "criterion 8 (cartpole controllers + random fixture)",
        bang_bang_ok
        and constant_ret < 200
        and abs(env_mean - CARTPOLE_RANDOM_MEAN_FIXTURE) <= 2
        and abs(oracle_mean - CARTPOLE_RANDOM_MEAN_FIXTURE) <= 2,
        f"bang-bang 200s={bang_bang_ok}, constant={constant_ret}, "
        f"random mean env {env_mean:.3f} vs oracle {oracle_mean:.3f} "
        f"vs fixture {CARTPOLE_RANDOM_MEAN_FIXTURE}",
    )


# ---------------------------------------------------------------------------
# 9. Improvement-engine laws and context fixtures

MARKER_LINE_FIXTURE = " ".join([
    "90: 104 83 123, 104 83 123, 104 83 123, 104 83 123, 104 83 123, 104 83",
    "123, 104 83 123, 104 83 123, 104 83 123, 104 83 123, 104 83 123, 104",
    "83 123, 104 83 123, 104 83 123, 104 83 123, 105 83 123, 105 83 123,",
    "106 83 123, 106 83 123, 107 83 123, 108 83 122, 109 83 122, 110 83",
    "122, 111 83 121, 112 82 120, 113 82 119, 113 82 118, 114 81 118, 115",
    "81 117, 115 81 116, 115 80 115, 116 80 114, 116 80 113, 117 79 112,",
    "117 79 111, 118 79 110, 118 78 109, 118 78 109, 118 78 109, 118 78",
    "109, 118 78 109, 118 78 109, 118 78 109, 118 78 109, 118 78 109, 118",
    "78 109, 118 78 109, 118 78 109, 118 78 109, 118 78 109",
])

MARKER_STATES_FIXTURE = (
    [[104, 83, 123]] * 15
    + [[105, 83, 123]] * 2
    + [[106, 83, 123]] * 2
    + [[107, 83, 123], [108, 83, 122], [109, 83, 122], [110, 83, 122],
       [111, 83, 121], [112, 82, 120], [113, 82, 119], [113, 82, 118],
       [114, 81, 118], [115, 81, 117], [115, 81, 116], [115, 80, 115],
       [116, 80, 114], [116, 80, 113], [117, 79, 112], [117, 79, 111],
       [118, 79, 110]]
    + [[118, 78, 109]] * 14
)

POLE_HISTORY_FIXTURE = "52: 40 50, 1, 40 54, 2, 41 49, 1, 41 54, 1"
POLE_OPEN_FIXTURE = "98: 44 50, 1, 44 55, 2, 45 50,"

CLICKER_LINES_FIXTURE = [
    "0: 80, 49, 138, 109, 54, 133; 45, 44, 55",
    "0: 82, 32, 155, 109, 54, 133; 48, 59, 48",
    "0: 82, 32, 155, 109, 54, 133; 48, 59, 48",
    "1: 88, 31, 154, 109, 54, 133; 45, 54, 43",
    "1: 85, 36, 146, 109, 54, 133; 57, 54, 46",
    "1: 93, 40, 142, 109, 54, 133; 44, 52, 43",
]


def test_criterion_9_improve_laws_and_fixtures():
    rng = random.Random(99)
    cfg_pool = [
        improve.ImproveConfig(token_budget=budget, target_offset_max=offset)
        for budget in (64, 256, 1024)
        for offset in (1, 5, 20)
    ]
    buffer = improve.Buffer()
    violations = []
    for i in range(10_000):
        op = rng.random()
        cfg = rng.choice(cfg_pool)
        if op < 0.5 or len(buffer) == 0:
            states = [[rng.randint(0, 200) for _ in range(3)]
                      for _ in range(rng.randint(1, 12))]
            buffer.insert(improve.TrajRecord(
                rng.randint(-10, 110), codec.encode_states_body(states), len(states), "m"
            ))
            rewards = [r.reward for r in buffer.records]
            if rewards != sorted(rewards):
                violations.append(f"sorting law at op {i}")
        elif op < 0.8:
            target = improve.propose_target(buffer, rng, cfg)
            if not (buffer.max_reward + 1 <= target <= buffer.max_reward + cfg.target_offset_max):
                violations.append(f"target law at op {i}")
        else:
            built = improve.build_context(buffer, cfg, 105, "0 0 0", rng=rng)
            if built.included > 0 and codec.estimate_tokens(built.prompt) > cfg.token_budget:
                violations.append(f"budget law at op {i}")

    # relabel law: stored rewards re-derived by replaying bodies in the env
    for seed in range(50):
        env = envs.GridEnv()
        env.reset(seed=seed)
        buf = improve.Buffer([improve.TrajRecord(0, "4 4", 0, "grid")])
        result = improve.run_episode(
            RandomPolicyModel(actions=(1, 2, 3, 4, 5), seed=seed), env, buf,
            improve.ImproveConfig(), random.Random(seed),
        )
        _, steps, _ = codec.decode_reward_obs_actions(f"0: {result.record.body}")
        replay = envs.GridEnv()
        replay.reset(seed=seed)
        reward = None
        for action in steps[1::2]:
            _, _, reward = replay.step(action)
        if reward != result.record.reward:
            violations.append(f"relabel law at seed {seed}")

    # context-line fixtures, byte-exact
    fixtures_ok = (
        codec.encode_reward_states(90, MARKER_STATES_FIXTURE) == MARKER_LINE_FIXTURE
        and codec.encode_reward_obs_actions(
            52, [[40, 50], 1, [40, 54], 2, [41, 49], 1, [41, 54], 1]
        ) == POLE_HISTORY_FIXTURE
        and codec.encode_reward_obs_actions(
            98, [[44, 50], 1, [44, 55], 2, [45, 50]], open_episode=True
        ) == POLE_OPEN_FIXTURE + " "
        and len(MARKER_STATES_FIXTURE) == 50
    )

    history = [codec.decode_clicker_tuple(line) for line in CLICKER_LINES_FIXTURE]
    clicker_prompt = improve.clicker_build_context(history, [93, 40, 142, 109, 54, 133])
    fixtures_ok &= clicker_prompt.split("\n")[:6] == CLICKER_LINES_FIXTURE

    buf = improve.Buffer([
        improve.TrajRecord(r, codec.encode_states_body([[104, 83, 123]] * 3), 3, "m")
        for r in (71, 72, 80, 90, 100)
    ])
    built = improve.build_context(
        buf, improve.ImproveConfig(token_budget=4096), 100, "104 83 123"
    )
    lines = built.prompt.split("\n")
    fixtures_ok &= (
        [line.split(":")[0] for line in lines[:5]] == ["71", "72", "80", "90", "100"]
        and lines[-1] == "100: 104 83 123"
    )

    check(
        "criterion 9 (improvement laws + context fixtures)",
        not violations and fixtures_ok,
        f"{len(violations)} law violations, fixtures byte-exact={fixtures_ok}",
    )


# ---------------------------------------------------------------------------
# 10. End-to-end online loop reproducibility


def test_criterion_10_online_loop_reproducible(tmp_path):
    for name in ("run_a", "run_b"):
        rc = cli_main([
            "improve-run", "--env", "grid", "--model-kind", "random_policy",
            "--episodes", "50", "--warmup", "20", "--seed", "314",
            "--out", str(tmp_path / name),
        ])
        assert rc == 0
    curve_a = (tmp_path / "run_a/curve.csv").read_bytes()
    curve_b = (tmp_path / "run_b/curve.csv").read_bytes()
    episodes_a = (tmp_path / "run_a/episodes.jsonl").read_bytes()
    episodes_b = (tmp_path / "run_b/episodes.jsonl").read_bytes()
    check(
        "criterion 10 (online loop byte-identical)",
        curve_a == curve_b and episodes_a == episodes_b,
        f"curve {len(curve_a)} bytes identical={curve_a == curve_b}",
    )


# ---------------------------------------------------------------------------
# 11. Clicker-training batch integration over the endpoints


def context_laws_hold(prompt: str) -> bool:
    lines = prompt.split("\n")
    history, trailer = lines[:-1], lines[-1]
    if not trailer.startswith("1: ") or not trailer.endswith("; "):
        return False
    labels = [line.split(":")[0] for line in history]
    if any(label not in ("0", "1") for label in labels):
        return False
    if labels != sorted(labels):  # every 0-line precedes every 1-line
        return False
    return labels.count("0") == labels.count("1")  # equal counts


def test_criterion_11_clicker_batch_integration():
    from fastapi.testclient import TestClient
    from seqpat.service import create_app

    client = TestClient(create_app())
    sid = client.post("/sessions", json={
        "batch": True, "seed": 23, "episode_len": 15, "warmup_episodes": 2,
        "model": {"kind": "random_policy", "seed": 23},
    }).json()["id"]
    client.post(f"/sessions/{sid}/resume")

    prev = client.get(f"/sessions/{sid}/state").json()
    law_failures = 0
    prompts_seen = 0
    for _ in range(10 * 15):
        snap = client.post(f"/sessions/{sid}/step").json()
        if snap["phase"] == "model_driven" and snap["last_prompt"]:
            prompts_seen += 1
            if not context_laws_hold(snap["last_prompt"]):
                law_failures += 1
        w_prev, w = prev["world"], snap["world"]
        closer_to_object = math.dist(w["effector"], w["object"]) < math.dist(
            w_prev["effector"], w_prev["object"]
        )
        closer_to_goal = math.dist(w["object"], w["goal"]) < math.dist(
            w_prev["object"], w_prev["goal"]
        )
        if closer_to_object or closer_to_goal:
            client.post(f"/sessions/{sid}/click")
        prev = snap

    client.post(f"/sessions/{sid}/step")  # label the final executed tuple
    final = client.get(f"/sessions/{sid}/state").json()
    warmup_steps = 2 * 15
    positives_after_warmup = sum(final["episode_clicks"][2:])
    check(
        "criterion 11 (clicker endpoints integration)",
        final["episode"] >= 10
        and positives_after_warmup >= 1
        and law_failures == 0
        and prompts_seen > 0,
        f"episodes {final['episode']}, positives after warmup {positives_after_warmup}, "
        f"context-law failures {law_failures}/{prompts_seen}",
    )
