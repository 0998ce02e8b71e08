"""Double-Q training loop: rollouts, replay, targets, checkpoints.

One episode runs on one freshly generated synthetic instance; behavior
is epsilon-greedy over all elements; learning draws uniform batches from
a FIFO replay buffer and regresses the online network onto targets that
pick the bootstrap action with the online weights but value it with a
periodically synced target copy.  Terminal transitions never bootstrap.

Everything is single-threaded and seeded, so a full run is reproducible
bit for bit from its config.
"""

from __future__ import annotations

import csv
import json
import os
from collections import deque
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import qnet
from .env import FlipEnv
from .graphs import WeightScheme, gen_ba, gen_er
from .objectives import (Oracle, make_infexp, make_maxcov, make_maxcut,
                         make_movrec_from_graph)
from .rng import derive_rng, derive_seed

APPLICATIONS = ("maxcut", "maxcov", "movrec", "infexp")

# stream ids for deriving independent RNGs from the run seed
_STREAM_PARAMS = 1
_STREAM_EXPLORE = 2
_STREAM_BUFFER = 3
_STREAM_GRAPH = 4
_STREAM_ORACLE = 5

SEED_ENV_VAR = "RELS_SEED"


@dataclass
class Transition:
    features: np.ndarray
    action: int
    reward: float
    next_features: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform with-replacement sampling."""

    def __init__(self, capacity: int, rng):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._rng = rng
        self._items: list[Transition] = []
        self._next = 0

    def push(self, tr: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def sample(self, count: int) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._rng.integers(0, len(self._items), size=count)
        return [self._items[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self._items)


@dataclass
class TrainConfig:
    """Run configuration; every field can come from a config file."""

    total_steps: int = 1_000_000
    app: str = "maxcut"
    n: int = 40
    er_p: float = 0.15
    ba_m: int = 4
    k: int = 30
    episode_len: int = 0            # 0 means 2 * k
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.1     # fraction of total_steps to reach eps_end
    gamma: float = 0.95
    buffer_capacity: int = 50_000
    batch_size: int = 64
    learn_every: int = 4
    target_sync_every: int = 1_000  # learner steps between hard syncs
    warmup: int = 1_000             # stored transitions before learning
    lr: float = 1e-4
    hidden: int = 64
    movrec_lam: float = 5.0
    maxcov_q: float = 6.0
    infexp_shape: float = 2.0
    infexp_scale: float = 1.0
    checkpoint_every: int = 50_000
    seed: int = 0

    def resolved_episode_len(self) -> int:
        return self.episode_len if self.episode_len > 0 else 2 * self.k

    def validate(self) -> None:
        if self.app not in APPLICATIONS:
            raise ValueError(f"unknown application {self.app!r}")
        positive = ["total_steps", "n", "k", "buffer_capacity", "batch_size",
                    "learn_every", "target_sync_every", "hidden"]
        for name in positive:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.eps_end <= self.eps_start <= 1.0):
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if not 0.0 < self.eps_decay_frac <= 1.0:
            raise ValueError("eps_decay_frac must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.k > self.n:
            raise ValueError("k cannot exceed n")


def load_config(path) -> TrainConfig:
    """Parse a JSON object or key=value lines into a TrainConfig."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if text.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    defaults = TrainConfig()
    kwargs = {}
    for name, default in asdict(defaults).items():
        if name not in raw:
            continue
        value = raw.pop(name)
        kwargs[name] = type(default)(value)
    if raw:
        raise ValueError(f"{path}: unknown config keys {sorted(raw)}")
    return TrainConfig(**kwargs)


def epsilon(cfg: TrainConfig, t: int) -> float:
    """Linear decay from eps_start to eps_end over the first decay window."""
    decay_end = cfg.eps_decay_frac * cfg.total_steps
    if t >= decay_end:
        return cfg.eps_end
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * (t / decay_end)


def training_oracle(cfg: TrainConfig, episode: int) -> Oracle:
    """Build a fresh synthetic instance for one episode.

    Graph family and weights follow the per-application training recipe:
    signed ER for the cut objective, unit-weight ER (expanded to arcs)
    for coverage, uniform-weight ER for the similarity objective, and
    uniform-weight preferential attachment for influence.
    """
    graph_seed = derive_seed(cfg.seed, _STREAM_GRAPH, episode)
    if cfg.app == "maxcut":
        return make_maxcut(gen_er(cfg.n, cfg.er_p, WeightScheme.SIGNED_UNIT, graph_seed))
    if cfg.app == "maxcov":
        g = gen_er(cfg.n, cfg.er_p, WeightScheme.UNIT, graph_seed)
        return make_maxcov(g.to_directed(), q=cfg.maxcov_q)
    if cfg.app == "movrec":
        g = gen_er(cfg.n, cfg.er_p, WeightScheme.UNIFORM_REAL, graph_seed)
        return make_movrec_from_graph(g, lam=cfg.movrec_lam)
    if cfg.app == "infexp":
        g = gen_ba(cfg.n, cfg.ba_m, WeightScheme.UNIFORM_REAL, graph_seed)
        return make_infexp(g, shape=cfg.infexp_shape, scale=cfg.infexp_scale,
                           seed=derive_seed(cfg.seed, _STREAM_ORACLE, episode))
    raise ValueError(f"unknown application {cfg.app!r}")


def compute_targets(online: qnet.QParams, target: qnet.QParams,
                    batch: list[Transition], gamma: float) -> np.ndarray:
    """Bootstrap targets: act with the online net, value with the target."""
    if not batch:
        raise ValueError("empty batch")
    out = np.empty(len(batch))
    open_idx = [i for i, tr in enumerate(batch) if not tr.done]
    for i, tr in enumerate(batch):
        out[i] = tr.reward
    if not open_idx:
        return out
    by_n: dict[int, list[int]] = {}
    for i in open_idx:
        by_n.setdefault(batch[i].next_features.shape[0], []).append(i)
    for n, idxs in sorted(by_n.items()):
        stacked = np.stack([batch[i].next_features for i in idxs])
        q_online = qnet.forward_many(online, stacked)
        q_target = qnet.forward_many(target, stacked)
        best = np.argmax(q_online, axis=1)
        rows = np.arange(len(idxs))
        for j, i in enumerate(idxs):
            out[i] += gamma * q_target[rows[j], best[j]]
    return out


@dataclass
class TrainResult:
    checkpoint: Path
    log: Path
    params: qnet.QParams
    episodes: int
    mean_recent_best: float


def train(cfg: TrainConfig, out_dir, quiet: bool = True) -> TrainResult:
    """Run the full training loop and write checkpoints plus a CSV log.

    The log has one row per environment step: step, episode, epsilon,
    reward, episode_return, f_best, mean_f_best_50, loss.  The
    RELS_SEED environment variable, when set, overrides cfg.seed.
    """
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        cfg = replace(cfg, seed=int(env_seed))
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    explore_rng = derive_rng(cfg.seed, _STREAM_EXPLORE)
    buffer = ReplayBuffer(cfg.buffer_capacity, derive_rng(cfg.seed, _STREAM_BUFFER))
    online = qnet.init_params(cfg.hidden, derive_seed(cfg.seed, _STREAM_PARAMS, 0))
    target = online.copy()
    opt_state = qnet.AdamState.zeros(online)

    episode_len = cfg.resolved_episode_len()
    recent_best: deque[float] = deque(maxlen=50)
    last_loss = float("nan")
    learner_steps = 0
    t = 0
    episode = 0
    log_path = out_dir / "training_log.csv"
    final_path = out_dir / "model_final.ckpt"

    with open(log_path, "w", newline="", encoding="utf-8") as log_file:
        log = csv.writer(log_file)
        log.writerow(["step", "episode", "epsilon", "reward", "episode_return",
                      "f_best", "mean_f_best_50", "loss"])
        while t < cfg.total_steps:
            oracle = training_oracle(cfg, episode)
            env = FlipEnv(oracle, cfg.k, episode_len)
            features = env.features()
            episode_return = 0.0
            while not env.done and t < cfg.total_steps:
                eps = epsilon(cfg, t)
                if explore_rng.random() < eps:
                    action = int(explore_rng.integers(env.n))
                else:
                    action = int(np.argmax(qnet.forward(online, features)))
                reward, done = env.step(action)
                next_features = env.features()
                buffer.push(Transition(features, action, reward, next_features, done))
                features = next_features
                episode_return += reward
                t += 1
                if len(buffer) >= cfg.warmup and t % cfg.learn_every == 0:
                    batch = buffer.sample(cfg.batch_size)
                    targets = compute_targets(online, target, batch, cfg.gamma)
                    triples = [(tr.features, tr.action, y)
                               for tr, y in zip(batch, targets)]
                    last_loss, grads = qnet.loss_and_grad(online, triples)
                    if not np.isfinite(last_loss):
                        raise RuntimeError(
                            f"non-finite loss {last_loss} at step {t} "
                            f"(grad norm {grads.global_norm():.3e})")
                    online, opt_state = qnet.adam_step(online, grads, opt_state, cfg.lr)
                    learner_steps += 1
                    if learner_steps % cfg.target_sync_every == 0:
                        target = online.copy()
                mean50 = float(np.mean(recent_best)) if recent_best else ""
                log.writerow([t, episode, f"{eps:.6f}", repr(reward),
                              repr(episode_return), repr(env.f_best), mean50,
                              repr(last_loss)])
                if cfg.checkpoint_every and t % cfg.checkpoint_every == 0:
                    qnet.save(online, out_dir / f"model_step{t}.ckpt")
            recent_best.append(env.f_best)
            episode += 1
            if not quiet and episode % 50 == 0:
                print(f"step {t}/{cfg.total_steps} episode {episode} "
                      f"eps {epsilon(cfg, t):.3f} mean_best_50 "
                      f"{np.mean(recent_best):.3f} loss {last_loss:.3e}")
    qnet.save(online, final_path)
    meta = {"config": asdict(cfg), "episodes": episode,
            "learner_steps": learner_steps, "code_version": _code_version()}
    (out_dir / "run_metadata.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    return TrainResult(final_path, log_path, online, episode,
                       float(np.mean(recent_best)) if recent_best else float("nan"))


def _code_version() -> str:
    from . import __version__
    return __version__
