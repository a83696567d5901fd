"""Deterministic, seedable simulations backing the improvement loops.

Each environment instance owns its mutable state; reset(seed) twice with
the same seed and action sequence replays the identical episode.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DomainError, StructureError


class GridEnv:
    """9x9 navigation: start at the center, random goal, fixed 20-step horizon.

    Actions 1-5 move right, up, left, down, or hold; moves into walls clamp.
    The terminal reward is round(100 - 10 * euclidean(agent, goal)).
    """

    SIZE = 9
    HORIZON = 20
    START = (4, 4)
    ACTIONS = (1, 2, 3, 4, 5)
    _MOVES = {1: (1, 0), 2: (0, 1), 3: (-1, 0), 4: (0, -1), 5: (0, 0)}

    def __init__(self, distance: str = "euclidean"):
        if distance not in ("euclidean", "manhattan"):
            raise DomainError(f"unknown distance {distance!r}")
        self.distance = distance
        self.agent = self.START
        self.goal = (0, 0)
        self.t = 0

    @property
    def action_space(self):
        return self.ACTIONS

    @property
    def obs(self) -> list[int]:
        return [self.agent[0], self.agent[1]]

    def reset(self, seed: int = 0) -> list[int]:
        rng = random.Random(seed)
        cells = [
            (x, y)
            for x in range(self.SIZE)
            for y in range(self.SIZE)
            if (x, y) != self.START
        ]
        self.goal = rng.choice(cells)
        self.agent = self.START
        self.t = 0
        return self.obs

    def _dist(self, a, b) -> float:
        if self.distance == "manhattan":
            return abs(a[0] - b[0]) + abs(a[1] - b[1])
        return math.dist(a, b)

    def reward(self, pos=None) -> int:
        pos = pos if pos is not None else self.agent
        return round(100 - 10 * self._dist(pos, self.goal))

    def step(self, action: int) -> tuple[list[int], bool, Optional[int]]:
        if action not in self.ACTIONS:
            raise DomainError(f"action {action!r} not in 1-5")
        if self.t >= self.HORIZON:
            raise StructureError("episode already terminated")
        dx, dy = self._MOVES[action]
        self.agent = (
            min(self.SIZE - 1, max(0, self.agent[0] + dx)),
            min(self.SIZE - 1, max(0, self.agent[1] + dy)),
        )
        self.t += 1
        terminal = self.t >= self.HORIZON
        return self.obs, terminal, self.reward() if terminal else None


def greedy_grid_policy(obs: Sequence[int], goal: Sequence[int]) -> int:
    """Step toward the goal along x first, then y; hold once there."""
    x, y = obs
    gx, gy = goal
    if x < gx:
        return 1
    if x > gx:
        return 3
    if y < gy:
        return 2
    if y > gy:
        return 4
    return 5


class CartPoleEnv:
    """Pole balancing with two binned observations (angle, angular velocity).

    Classic constants (gravity 9.8, cart mass 1.0, pole mass 0.1, half
    length 0.5, force ±10, Euler step 0.02); episode ends when |theta|
    exceeds 12 degrees or after 200 steps, and the return is the number of
    completed steps. Actions: 1 pushes left, 2 pushes right.
    """

    HORIZON = 200
    ACTIONS = (1, 2)
    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    HALF_LENGTH = 0.5
    FORCE = 10.0
    DT = 0.02
    THETA_MAX = 12 * math.pi / 180
    THETADOT_RANGE = (-2.0, 2.0)

    def __init__(self):
        self.state = (0.0, 0.0, 0.0, 0.0)  # x, x_dot, theta, theta_dot
        self.t = 0
        self.done = False

    @property
    def action_space(self):
        return self.ACTIONS

    def _bin(self, value: float, lo: float, hi: float) -> int:
        v = (value - lo) / (hi - lo) * 100
        return min(100, max(0, round(v)))

    @property
    def obs(self) -> list[int]:
        _, _, theta, theta_dot = self.state
        clipped = min(self.THETADOT_RANGE[1], max(self.THETADOT_RANGE[0], theta_dot))
        return [
            self._bin(theta, -self.THETA_MAX, self.THETA_MAX),
            self._bin(clipped, *self.THETADOT_RANGE),
        ]

    def reset(self, seed: int = 0) -> list[int]:
        rng = random.Random(seed)
        self.state = tuple(rng.uniform(-0.05, 0.05) for _ in range(4))
        self.t = 0
        self.done = False
        return self.obs

    def step(self, action: int) -> tuple[list[int], bool, Optional[int]]:
        if action not in self.ACTIONS:
            raise DomainError(f"action {action!r} not in (1, 2)")
        if self.done:
            raise StructureError("episode already terminated")
        x, x_dot, theta, theta_dot = self.state
        force = -self.FORCE if action == 1 else self.FORCE
        total_mass = self.MASS_CART + self.MASS_POLE
        polemass_length = self.MASS_POLE * self.HALF_LENGTH
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        temp = (force + polemass_length * theta_dot**2 * sin_t) / total_mass
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.MASS_POLE * cos_t**2 / total_mass)
        )
        x_acc = temp - polemass_length * theta_acc * cos_t / total_mass
        x += self.DT * x_dot
        x_dot += self.DT * x_acc
        theta += self.DT * theta_dot
        theta_dot += self.DT * theta_acc
        self.state = (x, x_dot, theta, theta_dot)
        self.t += 1
        self.done = abs(theta) > self.THETA_MAX or self.t >= self.HORIZON
        return self.obs, self.done, self.t if self.done else None


def bang_bang_cartpole_policy(obs: Sequence[int]) -> int:
    """Push toward the pole's lean using both binned observation dims."""
    lean = (obs[0] - 50) + (obs[1] - 50)
    return 2 if lean > 0 else 1


class PushWorld:
    """Kinematic pushing plane: 3D effector and object, integer 0-300 view.

    Actions are 3 integers 0-100; (50, 50, 50) holds still and each axis
    displaces by (action - 50) * step_scale. When the effector is within
    contact_radius of the object, the object receives the displacement
    component along the effector-to-object direction (push only, no pull).
    Episodes cover 15 steps (30 s at the nominal 2 s cadence).
    """

    BOUNDS = (0.0, 300.0)
    EPISODE_LEN = 15
    NOOP = (50, 50, 50)

    def __init__(self, step_scale: float = 1.0, contact_radius: float = 30.0,
                 goal_radius: float = 35.0):
        self.step_scale = step_scale
        self.contact_radius = contact_radius
        self.goal_radius = goal_radius
        self.effector = [150.0, 150.0, 150.0]
        self.object = [200.0, 150.0, 150.0]
        self.goal = [250.0, 150.0, 150.0]
        self.t = 0

    @property
    def obs(self) -> list[int]:
        lo, hi = self.BOUNDS
        return [min(int(hi), max(int(lo), round(v))) for v in self.effector + self.object]

    @property
    def done(self) -> bool:
        return self.t >= self.EPISODE_LEN

    def reset(self, seed: int = 0) -> list[int]:
        rng = random.Random(seed)
        self.effector = [rng.uniform(60, 240) for _ in range(3)]
        # object within plausible reach, goal offset from the object
        self.object = [
            min(280.0, max(20.0, e + rng.uniform(-60, 60))) for e in self.effector
        ]
        self.goal = [
            min(280.0, max(20.0, o + rng.uniform(-80, 80))) for o in self.object
        ]
        self.t = 0
        return self.obs

    def step(self, action: Sequence[int]) -> list[int]:
        if len(action) != 3 or any(not 0 <= a <= 100 for a in action):
            raise DomainError(f"action {action!r} must be 3 integers in 0-100")
        if self.done:
            raise StructureError("episode already terminated")
        lo, hi = self.BOUNDS
        disp = [(a - 50) * self.step_scale for a in action]
        gap = [o - e for o, e in zip(self.object, self.effector)]
        dist = math.sqrt(sum(g * g for g in gap))
        if dist <= self.contact_radius and dist > 0:
            normal = [g / dist for g in gap]
            along = sum(d * n for d, n in zip(disp, normal))
            if along > 0:
                self.object = [
                    min(hi, max(lo, o + along * n)) for o, n in zip(self.object, normal)
                ]
        self.effector = [min(hi, max(lo, e + d)) for e, d in zip(self.effector, disp)]
        self.t += 1
        return self.obs

    def effector_object_distance(self) -> float:
        return math.dist(self.effector, self.object)

    def object_goal_distance(self) -> float:
        return math.dist(self.object, self.goal)


# ---------------------------------------------------------------------------
# Marker-in-cup scene


@dataclass
class MarkerScene:
    """Static reaching scene; trajectories are fixed-length integer paths."""

    cup_pos: tuple[int, int, int] = (118, 78, 109)
    bin_range: tuple[int, int] = (0, 200)
    traj_len: int = 50
    kappa: float = field(default=0.0)

    def __post_init__(self):
        if not self.kappa:
            lo, hi = self.bin_range
            diagonal = math.sqrt(3) * (hi - lo)
            self.kappa = 100.0 / (diagonal * 0.35)

    def reward(self, state: Sequence[int]) -> int:
        return round(100 - self.kappa * math.dist(state, self.cup_pos))

    def score_trajectory(self, trajectory: Sequence[Sequence[int]]) -> int:
        if not trajectory:
            raise StructureError("empty trajectory")
        return self.reward(trajectory[-1])

    def min_reward(self) -> int:
        lo, hi = self.bin_range
        corners = [(lo, lo, lo), (lo, lo, hi), (lo, hi, lo), (hi, lo, lo),
                   (lo, hi, hi), (hi, lo, hi), (hi, hi, lo), (hi, hi, hi)]
        return min(self.reward(c) for c in corners)


def make_marker_demo(scene: MarkerScene, seed: int = 0) -> list[list[int]]:
    """A full demonstration: dwell near the start, then ease into the cup.

    The final state equals the cup position exactly, so the demonstration
    scores reward 100; the dwell keeps early stop fractions clustered, the
    way recorded reaching motions look.
    """
    rng = random.Random(seed)
    lo, hi = scene.bin_range
    # distance band keeps the fractional-stop rewards in the 70-90 range
    d_lo, d_hi = 25.0 / scene.kappa, 29.0 / scene.kappa
    while True:
        start = [scene.cup_pos[d] + rng.randint(-int(d_hi), int(d_hi)) for d in range(3)]
        start = [min(hi, max(lo, v)) for v in start]
        if d_lo <= math.dist(start, scene.cup_pos) <= d_hi:
            break
    n = scene.traj_len
    dwell = n * 3 // 10
    traj = [list(start) for _ in range(dwell)]
    for i in range(dwell, n):
        frac = (i - dwell) / (n - 1 - dwell)
        eased = frac**1.25  # slow start, like a hesitant recorded reach
        traj.append(
            [round(s + (c - s) * eased) for s, c in zip(start, scene.cup_pos)]
        )
    traj[-1] = list(scene.cup_pos)
    return traj


def marker_build_context(
    scene: MarkerScene,
    full_traj: Sequence[Sequence[int]],
    fractions: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
) -> list[tuple[int, list[list[int]]]]:
    """Fractional-stop context trajectories, each padded back to full length.

    Each fraction freezes the demonstration at that share of its timesteps
    and repeats the frozen state; the full demonstration is appended last
    with its own (maximal) reward.
    """
    n = scene.traj_len
    if len(full_traj) != n:
        raise StructureError(f"trajectory must have {n} steps, got {len(full_traj)}")
    out = []
    for frac in fractions:
        stop = round(frac * (n - 1))
        frozen = [list(s) for s in full_traj[: stop + 1]]
        frozen += [list(full_traj[stop])] * (n - len(frozen))
        out.append((scene.score_trajectory(frozen), frozen))
    out.append((scene.score_trajectory(full_traj), [list(s) for s in full_traj]))
    return out
