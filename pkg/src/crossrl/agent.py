"""Actor-critic network, GAE and the clipped PPO update, in plain numpy.

The network is a tanh MLP with a shared body and two heads (16 action
logits, 1 value). Gradients are derived by hand for this architecture.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import N_ACTIONS, OBS_DIM

CKPT_MAGIC = b"XRLCKPT1"
CKPT_VERSION = 1


@dataclass
class PPOConfig:
    learning_rate: float = 3e-3
    batch_size: int = 1028
    clip: float = 0.2
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 10
    max_grad_norm: float = 0.5
    total_steps: int = 200_000
    n_envs: int = 16
    n_steps: int = 128
    hidden: tuple[int, ...] = (64, 64)
    curriculum: tuple[tuple[float, float], ...] = ((0.0, 0.0), (1 / 3, 0.5), (2 / 3, 0.9))
    seed: int = 0

    def __post_init__(self) -> None:
        self.hidden = tuple(self.hidden)
        self.curriculum = tuple(tuple(p) for p in self.curriculum)
        if not 0 < self.clip < 1:
            raise ValueError("clip ratio must lie in (0, 1)")
        if not (0 < self.gamma <= 1 and 0 < self.gae_lambda <= 1):
            raise ValueError("gamma and lambda must lie in (0, 1]")

    def ba_probability(self, fraction: float) -> float:
        """Probability of drawing a BA-class graph at a point of training progress."""
        prob = 0.0
        for start, p in self.curriculum:
            if fraction >= start:
                prob = p
        return prob


def _softmax(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = z - z.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    return np.exp(logp), logp


class Policy:
    """Shared-body actor-critic MLP."""

    def __init__(self, obs_dim: int = OBS_DIM, hidden=(64, 64), n_actions: int = N_ACTIONS, seed: int = 0):
        self.obs_dim, self.hidden, self.n_actions = obs_dim, tuple(hidden), n_actions
        rng = np.random.default_rng(seed)
        sizes = (obs_dim,) + self.hidden
        self.params: dict[str, np.ndarray] = {}
        for i in range(len(self.hidden)):
            fan_in = sizes[i]
            self.params[f"W{i}"] = rng.normal(0, np.sqrt(2.0 / fan_in), size=(fan_in, sizes[i + 1]))
            self.params[f"b{i}"] = np.zeros(sizes[i + 1])
        last = sizes[-1]
        # small policy head keeps the initial distribution near uniform
        self.params["Wp"] = rng.normal(0, 0.01 / np.sqrt(last), size=(last, n_actions))
        self.params["bp"] = np.zeros(n_actions)
        self.params["Wv"] = rng.normal(0, 1.0 / np.sqrt(last), size=(last, 1))
        self.params["bv"] = np.zeros(1)

    @property
    def names(self) -> list[str]:
        return list(self.params)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self.names])

    def set_flat(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64)
        i = 0
        for k in self.names:
            p = self.params[k]
            self.params[k] = x[i:i + p.size].reshape(p.shape).copy()
            i += p.size
        if i != len(x):
            raise ValueError(f"expected {i} parameters, got {len(x)}")

    def copy(self) -> "Policy":
        other = Policy.__new__(Policy)
        other.obs_dim, other.hidden, other.n_actions = self.obs_dim, self.hidden, self.n_actions
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    def architecture(self) -> dict:
        return {"obs_dim": self.obs_dim, "hidden": list(self.hidden), "n_actions": self.n_actions,
                "activation": "tanh"}

    def config_hash(self) -> str:
        blob = json.dumps(self.architecture(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _forward(self, obs: np.ndarray):
        x = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        if not np.isfinite(x).all():
            raise ValueError("observation contains non-finite values")
        acts = [x]
        for i in range(len(self.hidden)):
            x = np.tanh(x @ self.params[f"W{i}"] + self.params[f"b{i}"])
            acts.append(x)
        logits = x @ self.params["Wp"] + self.params["bp"]
        value = (x @ self.params["Wv"] + self.params["bv"])[:, 0]
        return logits, value, acts

    def forward(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Action probabilities and value estimates; batched or single observation."""
        logits, value, _ = self._forward(obs)
        probs, _ = _softmax(logits)
        if np.ndim(obs) == 1:
            return probs[0], value[0]
        return probs, value

    def loss_and_grad(self, obs, actions, old_logp, advantages, returns, clip: float,
                      ent_coef: float, vf_coef: float, need_grad: bool = True):
        """Full PPO loss (clipped surrogate - entropy bonus + value loss) and its gradient."""
        logits, value, acts = self._forward(obs)
        B = len(actions)
        probs, logp = _softmax(logits)
        rows = np.arange(B)
        lp_a = logp[rows, actions]
        ratio = np.exp(lp_a - old_logp)
        s1 = ratio * advantages
        s2 = np.clip(ratio, 1 - clip, 1 + clip) * advantages
        pg_loss = -np.mean(np.minimum(s1, s2))
        entropy = -(probs * logp).sum(axis=1)
        v_loss = np.mean((value - returns) ** 2)
        loss = pg_loss - ent_coef * entropy.mean() + vf_coef * v_loss
        diag = {"loss": float(loss), "policy_loss": float(pg_loss), "value_loss": float(v_loss),
                "entropy": float(entropy.mean()),
                "clip_fraction": float(np.mean(np.abs(ratio - 1) > clip))}
        if not need_grad:
            return loss, None, diag
        # d loss / d log pi(a): gradient passes only where the unclipped term is the minimum
        g_lp = np.where(s1 <= s2, -ratio * advantages, 0.0) / B
        onehot = np.zeros_like(probs)
        onehot[rows, actions] = 1.0
        d_logits = g_lp[:, None] * (onehot - probs)
        # entropy term: dH/dz_k = -p_k (log p_k + H)
        d_logits += ent_coef / B * probs * (logp + entropy[:, None])
        d_value = vf_coef * 2.0 * (value - returns) / B
        grads = {}
        h = acts[-1]
        grads["Wp"] = h.T @ d_logits
        grads["bp"] = d_logits.sum(axis=0)
        grads["Wv"] = h.T @ d_value[:, None]
        grads["bv"] = np.array([d_value.sum()])
        dh = d_logits @ self.params["Wp"].T + d_value[:, None] @ self.params["Wv"].T
        for i in reversed(range(len(self.hidden))):
            dz = dh * (1.0 - acts[i + 1] ** 2)
            grads[f"W{i}"] = acts[i].T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            dh = dz @ self.params[f"W{i}"].T
        return loss, grads, diag

    # -- checkpoints ------------------------------------------------------

    def save(self, path: str | Path, config: dict | None = None, metrics: dict | None = None) -> None:
        header = {"version": CKPT_VERSION, "architecture": self.architecture(),
                  "config_hash": self.config_hash(),
                  "shapes": {k: list(v.shape) for k, v in self.params.items()},
                  "config": config or {}, "metrics": metrics or {}}
        hb = json.dumps(header, sort_keys=True).encode()
        body = self.flat().astype("<f8").tobytes()
        Path(path).write_bytes(CKPT_MAGIC + struct.pack("<I", len(hb)) + hb + body)

    @classmethod
    def load(cls, path: str | Path) -> tuple["Policy", dict]:
        raw = Path(path).read_bytes()
        if raw[:8] != CKPT_MAGIC:
            raise ValueError(f"{path}: not a policy checkpoint")
        (hlen,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + hlen])
        if header.get("version") != CKPT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        arch = header["architecture"]
        pol = cls(arch["obs_dim"], tuple(arch["hidden"]), arch["n_actions"])
        if pol.config_hash() != header["config_hash"]:
            raise ValueError(f"{path}: config hash mismatch")
        pol.set_flat(np.frombuffer(raw[12 + hlen:], dtype="<f8"))
        return pol, header


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    """Categorical sample and its log-probability."""
    cdf = np.cumsum(probs)
    a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    a = min(a, len(probs) - 1)
    while probs[a] <= 0:
        a -= 1
    return a, float(np.log(probs[a]))


def compute_gae(rewards, values, dones, last_values, gamma: float, lam: float):
    """Generalized advantage estimates and return targets.

    Arrays are (T,) or (T, n_envs); ``dones[t]`` marks that the episode ended
    after step t, which stops bootstrapping across the boundary.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    adv = np.zeros_like(rewards)
    last = np.zeros_like(rewards[0])
    next_v = np.asarray(last_values, dtype=np.float64)
    for t in reversed(range(len(rewards))):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_v * live - values[t]
        last = delta + gamma * lam * live * last
        adv[t] = last
        next_v = values[t]
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    if len(adv) < 2:
        return adv
    return (adv - adv.mean()) / (adv.std() + 1e-8)


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for k, g in grads.items():
            m = self.m.get(k, np.zeros_like(g))
            v = self.v.get(k, np.zeros_like(g))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.m[k], self.v[k] = m, v
            mh = m / (1 - self.beta1 ** self.t)
            vh = v / (1 - self.beta2 ** self.t)
            params[k] = params[k] - self.lr * mh / (np.sqrt(vh) + self.eps)


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


def ppo_update(policy: Policy, batch: Batch, cfg: PPOConfig, opt: Adam | None = None,
               rng: np.random.Generator | None = None, normalize: bool = True):
    """Run ``cfg.epochs`` passes of minibatch PPO; returns (policy, diagnostics).

    Parameters are restored and the update aborted if any loss is non-finite.
    """
    opt = opt or Adam(cfg.learning_rate)
    rng = rng or np.random.default_rng(cfg.seed)
    backup = {k: v.copy() for k, v in policy.params.items()}
    n = len(batch)
    hist = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            sel = order[lo:lo + cfg.batch_size]
            adv = batch.advantages[sel]
            if normalize:
                adv = normalize_advantages(adv)
            loss, grads, diag = policy.loss_and_grad(
                batch.obs[sel], batch.actions[sel], batch.logp[sel], adv, batch.returns[sel],
                cfg.clip, cfg.ent_coef, cfg.vf_coef)
            gnorm = np.sqrt(sum(float((g ** 2).sum()) for g in grads.values()))
            if not (np.isfinite(loss) and np.isfinite(gnorm)):
                policy.params = backup
                return policy, {"aborted": True}
            if cfg.max_grad_norm and gnorm > cfg.max_grad_norm:
                grads = {k: g * (cfg.max_grad_norm / gnorm) for k, g in grads.items()}
            if cfg.learning_rate > 0:
                opt.step(policy.params, grads)
            hist.append(diag)
    if not all(np.isfinite(v).all() for v in policy.params.values()):
        policy.params = backup
        return policy, {"aborted": True}
    out = {k: float(np.mean([h[k] for h in hist])) for k in hist[0]} if hist else {}
    out["aborted"] = False
    return policy, out


def config_dict(cfg: PPOConfig) -> dict:
    d = asdict(cfg)
    d["hidden"] = list(cfg.hidden)
    d["curriculum"] = [list(p) for p in cfg.curriculum]
    return d
