"""Episodic flip environment over a set-function oracle.

An episode starts from the empty set and runs a fixed number of steps
(twice the cardinality bound by default).  Each step flips one element,
pays a reward only for improving on the best value seen so far, and
penalizes additions attempted at or above the bound by scaling the
improvement with the (negative) remaining budget.  The answer extracted
from an episode is the best feasible set observed, not the final set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .objectives import Oracle

FEATURE_DIM = 5


class FlipEnv:
    """Mutable episode state bound to one oracle instance.

    The per-element feature rows are (membership, scaled flip gain,
    scaled age, feasibility flag, scaled distance to the best value).
    Gains and the distance are divided by a per-episode scale taken from
    the largest initial gain magnitude so features stay comparable
    across objectives with very different value ranges; ages are divided
    by the episode length.
    """

    def __init__(self, oracle: Oracle, k: int, episode_len: int | None = None,
                 seed: int | None = None):
        if not 1 <= k <= oracle.n:
            raise ValueError(f"need 1 <= k <= {oracle.n}, got k={k}")
        self.oracle = oracle
        self.n = oracle.n
        self.k = int(k)
        self.episode_len = int(episode_len) if episode_len is not None else 2 * self.k
        if self.episode_len < 1:
            raise ValueError("episode length must be positive")
        self.seed = seed  # reserved for randomized starts; episodes begin empty
        self.reset()

    def reset(self) -> "FlipEnv":
        self.oracle.set_state(())
        self.t = 0
        self.ages = np.zeros(self.n)
        self.deltas = self.oracle.gains()
        self.f_cur = self.oracle.current_value
        self.f_best = self.f_cur
        self.best_set: tuple[int, ...] = ()
        self.sigma = max(1.0, float(np.max(np.abs(self.deltas))) if self.n else 1.0)
        return self

    @property
    def size(self) -> int:
        return self.oracle.size

    @property
    def done(self) -> bool:
        return self.t >= self.episode_len

    def features(self) -> np.ndarray:
        out = np.empty((self.n, FEATURE_DIM))
        x = self.oracle.in_set()
        out[:, 0] = x
        out[:, 1] = self.deltas / self.sigma
        out[:, 2] = self.ages / self.episode_len
        out[:, 3] = 1.0 if self.size <= self.k else x
        out[:, 4] = (self.f_best - self.f_cur) / self.sigma
        return out

    def step(self, action: int) -> tuple[float, bool]:
        """Flip `action` and return (reward, done)."""
        if self.done:
            raise RuntimeError("episode is finished; reset before stepping")
        if not 0 <= action < self.n:
            raise ValueError(f"action {action} outside [0, {self.n})")
        pre_size = self.size
        was_add = not self.oracle.in_set()[action]
        self.oracle.flip(int(action))
        self.f_cur = self.oracle.current_value
        self.deltas = self.oracle.gains()
        size_after = self.size
        improvement = max(self.f_cur - self.f_best, 0.0)
        if was_add and pre_size >= self.k:
            budget = float(self.k - size_after)
            reward = max(improvement * budget / self.n, 0.0)
        else:
            reward = max(improvement / self.n, 0.0)
        if size_after <= self.k and self.f_cur > self.f_best:
            self.f_best = self.f_cur
            self.best_set = tuple(int(e) for e in self.oracle.current_set())
        self.ages += 1.0
        self.ages[action] = 0.0
        self.t += 1
        return reward, self.done

    def best(self) -> tuple[tuple[int, ...], float]:
        """Best feasible set observed this episode and its value."""
        return self.best_set, float(self.f_best)


@dataclass
class TraceRow:
    t: int
    action: int
    reward: float
    f_cur: float
    f_best: float
    size: int


def rollout(env: FlipEnv, policy, steps: int | None = None) -> list[TraceRow]:
    """Drive a reset env with `policy(env) -> action` until done."""
    rows = []
    limit = env.episode_len if steps is None else min(steps, env.episode_len)
    while env.t < limit:
        action = int(policy(env))
        reward, _ = env.step(action)
        rows.append(TraceRow(env.t, action, reward, env.f_cur, env.f_best, env.size))
    return rows


def write_trace_csv(rows: list[TraceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "action", "reward", "f_cur", "f_best", "|V|"])
        for r in rows:
            writer.writerow([r.t, r.action, repr(r.reward), repr(r.f_cur),
                             repr(r.f_best), r.size])
