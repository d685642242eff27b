"""PPO training over a pool of graphs, plus policy wrappers for evaluation."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .agent import Adam, Batch, Policy, PPOConfig, compute_gae, config_dict, ppo_update, sample_action
from .env import N_ACTIONS, OBS_DIM, CrossingEnv, EnvConfig, run_episode
from .geometry import Drawing, build_index
from .graph import Graph
from .layouts import layout_kamada_kawai

log = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "mean_reward", "mean_episode_return", "entropy", "policy_loss", "value_loss", "ba_prob")


class InitialLayouts:
    """Memoized KK drawings, one per graph, so every episode starts from the same layout."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._cache: dict[tuple, Drawing] = {}

    def __call__(self, g: Graph) -> Drawing:
        key = (g.n, g.edges)
        if key not in self._cache:
            self._cache[key] = layout_kamada_kawai(g, seed=self.seed)
        return self._cache[key].copy()


class CurriculumSampler:
    """Draws a training graph: BA-class with a progress-dependent probability, else Rome-class."""

    def __init__(self, rome: Sequence[Graph], ba: Sequence[Graph], cfg: PPOConfig, rng: np.random.Generator):
        if not rome and not ba:
            raise ValueError("no training graphs")
        self.rome, self.ba, self.cfg, self.rng = list(rome), list(ba), cfg, rng

    def __call__(self, fraction: float) -> tuple[Graph, str]:
        p = self.cfg.ba_probability(fraction)
        use_ba = (self.rng.random() < p and self.ba) or not self.rome
        pool, cls = (self.ba, "ba") if use_ba else (self.rome, "rome")
        return pool[int(self.rng.integers(len(pool)))], cls


@dataclass
class TrainResult:
    policy: Policy
    log: list[dict] = field(default_factory=list)
    episodes: int = 0
    class_counts: dict = field(default_factory=dict)


def train(cfg: PPOConfig, rome: Sequence[Graph], ba: Sequence[Graph] = (), *, objective: str = "gc",
          env_config: EnvConfig | None = None, log_path: str | Path | None = None,
          checkpoint_path: str | Path | None = None, policy: Policy | None = None) -> TrainResult:
    """Train a policy with synchronous rollouts from ``cfg.n_envs`` environments.

    Each environment runs one graph per episode and draws a new graph from
    the curriculum when the episode ends. Updates happen every
    ``cfg.n_steps`` steps per environment.
    """
    env_config = env_config or EnvConfig(objective=objective)
    root = np.random.SeedSequence(cfg.seed)
    s_agent, s_env, s_sample = root.spawn(3)
    rng_agent = np.random.default_rng(s_agent)
    rng_update = np.random.default_rng(s_agent.spawn(1)[0])
    sampler = CurriculumSampler(rome, ba, cfg, np.random.default_rng(s_sample))
    env_seeds = s_env.generate_state(cfg.n_envs)
    policy = policy or Policy(OBS_DIM, cfg.hidden, N_ACTIONS, seed=int(s_agent.generate_state(1)[0]))
    opt = Adam(cfg.learning_rate)
    layouts = InitialLayouts(seed=cfg.seed)
    result = TrainResult(policy)
    counts = {"rome": 0, "ba": 0}

    envs: list[CrossingEnv] = []
    obs = np.zeros((cfg.n_envs, OBS_DIM), dtype=np.float32)
    ep_return = np.zeros(cfg.n_envs)

    def start(i: int, fraction: float) -> None:
        for _ in range(1000):
            g, cls = sampler(fraction)
            env = CrossingEnv(g, env_config, seed=int(env_seeds[i]) + result.episodes, initial=layouts(g))
            result.episodes += 1
            o = env.reset()
            if env.vertex >= 0:
                break
        else:
            raise RuntimeError("no training graph has a crossing in its initial layout")
        counts[cls] += 1
        if i < len(envs):
            envs[i] = env
        else:
            envs.append(env)
        obs[i] = o
        ep_return[i] = 0.0

    for i in range(cfg.n_envs):
        start(i, 0.0)

    writer = None
    fh = None
    if log_path is not None:
        fh = open(log_path, "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        writer.writeheader()

    steps = 0
    T, E = cfg.n_steps, cfg.n_envs
    t0 = time.time()
    try:
        while steps < cfg.total_steps:
            buf_obs = np.zeros((T, E, OBS_DIM), dtype=np.float32)
            buf_act = np.zeros((T, E), dtype=np.int64)
            buf_logp = np.zeros((T, E))
            buf_rew = np.zeros((T, E))
            buf_val = np.zeros((T, E))
            buf_done = np.zeros((T, E), dtype=bool)
            finished = []
            for t in range(T):
                probs, values = policy.forward(obs)
                buf_obs[t] = obs
                buf_val[t] = values
                fraction = steps / cfg.total_steps
                for i, env in enumerate(envs):
                    a, lp = sample_action(probs[i], rng_agent)
                    o, r, term, trunc, _ = env.step(a)
                    buf_act[t, i], buf_logp[t, i], buf_rew[t, i] = a, lp, r
                    ep_return[i] += r
                    if term or trunc:
                        buf_done[t, i] = True
                        finished.append(ep_return[i])
                        start(i, fraction)
                    else:
                        obs[i] = o
                steps += E
            _, last_v = policy.forward(obs)
            adv, ret = compute_gae(buf_rew, buf_val, buf_done, last_v, cfg.gamma, cfg.gae_lambda)
            batch = Batch(buf_obs.reshape(T * E, OBS_DIM), buf_act.ravel(), buf_logp.ravel(),
                          adv.ravel(), ret.ravel())
            policy, diag = ppo_update(policy, batch, cfg, opt, rng_update)
            row = {"step": steps, "mean_reward": float(buf_rew.mean()),
                   "mean_episode_return": float(np.mean(finished)) if finished else float("nan"),
                   "entropy": diag.get("entropy", float("nan")),
                   "policy_loss": diag.get("policy_loss", float("nan")),
                   "value_loss": diag.get("value_loss", float("nan")),
                   "ba_prob": cfg.ba_probability(steps / cfg.total_steps)}
            result.log.append(row)
            if writer is not None:
                writer.writerow(row)
                fh.flush()
            log.info("step %d reward %.4f entropy %.3f (%.0fs)", steps, row["mean_reward"], row["entropy"],
                     time.time() - t0)
            if checkpoint_path is not None:
                policy.save(checkpoint_path, config={**config_dict(cfg), "objective": env_config.objective},
                            metrics=row)
    finally:
        if fh is not None:
            fh.close()
    result.policy = policy
    result.class_counts = counts
    return result


class StochasticPolicy:
    """Callable ``(obs, rng) -> action`` sampling from a trained policy."""

    def __init__(self, policy: Policy):
        self.policy = policy

    def __call__(self, obs: np.ndarray, rng: np.random.Generator) -> int:
        probs, _ = self.policy.forward(obs)
        return sample_action(probs, rng)[0]


def uniform_policy(obs: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.integers(N_ACTIONS))


def optimize_drawing(g: Graph, policy, objective: str, seed: int = 0, initial: Drawing | None = None,
                     env_config: EnvConfig | None = None, deadline=None) -> tuple[Drawing, dict]:
    """Post-process a drawing (KK by default) with one RL episode; returns the best drawing and metrics."""
    env_config = env_config or EnvConfig(objective=objective)
    t0 = time.perf_counter()
    initial = initial if initial is not None else layout_kamada_kawai(g, seed=seed)
    env = CrossingEnv(g, env_config, seed=seed, initial=initial)
    best = run_episode(env, policy, np.random.default_rng(seed + 1), deadline=deadline)
    idx = build_index(best)
    return best, {"gcn": idx.total, "lcn": idx.lcr, "steps": env.state.total_steps,
                  "runtime": time.perf_counter() - t0}
