"""Invariance-regularized policy-gradient training and reference trainers.

Each training step samples a mini-batch of queries, builds an adversarial
copy of every query (first moving items only inside the sensitive subspace,
then a penalized unconstrained ascent), updates the dual variable of the
transport budget and finally takes an ascent step on the policy weights.

All randomness is drawn from substreams keyed by ``(seed, purpose, step,
query index)`` so results do not depend on evaluation order.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DataError, Dataset, Query, SizeMismatch
from .fair_metric import SINGULAR_TOL, FairItemMetric, project_complement
from .ot import query_distance, solve_assignment
from .fair_metric import pairwise_distances
from .policy_gradient import LinearPolicy, UtilitySpec, utility_grad_estimate

log = logging.getLogger(__name__)

VARIANTS = ("senstir", "baseline", "project", "random")

_STREAMS = {"data": 0, "init": 1, "sampling": 2, "attack": 3, "batch": 4, "eval": 5}


def substream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    """Independent generator for ``purpose`` and integer ``keys``."""
    return np.random.default_rng([int(seed), _STREAMS[purpose], *map(int, keys)])


class Adam:
    """Adam moment state for one parameter array; ``step`` returns the increment
    for *ascent* on the supplied gradient."""

    def __init__(self, shape, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, shape, lr):
        self.lr = lr

    def step(self, grad):
        return self.lr * grad


def make_optimizer(kind: str, shape, lr):
    if kind == "adam":
        return Adam(shape, lr)
    if kind == "sgd":
        return SGD(shape, lr)
    raise ValueError(f"unknown optimizer {kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    # defaults follow the synthetic-data row of the reference hyperparameters
    rho: float = 0.001
    epsilon: float = 0.001
    lambda_init: float = 2.0
    lambda_step: float = 1.0
    theta_step: float = 0.001
    attack_subspace_steps: int = 20
    attack_subspace_lr: float = 0.001
    attack_full_steps: int = 20
    attack_full_lr: float = 0.001
    attack_init_scale: float = 20.0
    batch_size: int = 1
    mc_samples: int = 10
    epochs: int = 2000
    fair_start_frac: float = 0.0
    l2: float = 0.0
    seed: int = 0
    weight_init_range: float = 1e-4
    optimizer: str = "adam"

    def __post_init__(self):
        for name in ("rho", "lambda_init", "l2", "weight_init_range", "attack_init_scale"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
        for name in ("epsilon", "lambda_step", "theta_step", "attack_subspace_lr", "attack_full_lr"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be > 0")
        for name in ("batch_size", "mc_samples"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be >= 1")
        for name in ("epochs", "attack_subspace_steps", "attack_full_steps"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
        if not 0.0 <= self.fair_start_frac <= 1.0:
            raise DataError("fair_start_frac must lie in [0, 1]")
        if self.optimizer not in ("adam", "sgd"):
            raise DataError(f"unknown optimizer {self.optimizer!r}")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainHistory:
    utility: list = field(default_factory=list)
    mean_dq: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    regularizer: list = field(default_factory=list)

    def __len__(self):
        return len(self.utility)

    def record(self, utility, mean_dq, lam, regularizer):
        self.utility.append(float(utility))
        self.mean_dq.append(float(mean_dq))
        self.lam.append(float(lam))
        self.regularizer.append(float(regularizer))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def score_divergence(policy: LinearPolicy, q: Query, q_adv: Query) -> float:
    """``1/2 * ||h(q_adv) - h(q)||^2`` with items compared position-wise."""
    diff = policy.scores(q_adv) - policy.scores(q)
    return 0.5 * float(diff @ diff)


def attack_objective(policy: LinearPolicy, q: Query, q_adv: Query, metric: FairItemMetric, lam: float) -> float:
    return score_divergence(policy, q, q_adv) - lam * query_distance(metric, q, q_adv).value


def subspace_attack(policy: LinearPolicy, q: Query, metric: FairItemMetric, steps: int, lr: float,
                    rng: np.random.Generator | None = None, init_scale: float = 0.0,
                    optimizer: str = "adam") -> Query:
    """Move each item inside the sensitive subspace to maximize score divergence.

    Perturbation coordinates start at ``N(0, init_scale**2)``; at zero the
    ascent direction vanishes, so a positive scale is what lets the attack
    leave the original query. The result is always at fair distance 0.
    """
    basis = metric.subspace.basis
    n, k = q.n, basis.shape[1]
    if init_scale > 0:
        if rng is None:
            raise ValueError("a random stream is required when init_scale > 0")
        delta = init_scale * rng.standard_normal((n, k))
    else:
        delta = np.zeros((n, k))
    a = basis.T @ policy.theta
    opt = make_optimizer(optimizer, delta.shape, lr)
    for _ in range(steps):
        grad = np.outer(delta @ a, a)
        delta = delta + opt.step(grad)
    return q.with_features(q.features + delta @ basis.T)


def _transport_grad(metric: FairItemMetric, x: np.ndarray, x_adv: np.ndarray, perm: np.ndarray) -> np.ndarray:
    # rows of x are sent to rows perm of x_adv with mass 1/n each
    n = x.shape[0]
    src = np.empty(n, dtype=int)
    src[perm] = np.arange(n)
    diff = metric.project(x_adv - x[src])
    if metric.mode == "squared":
        return 2.0 * diff / n
    norms = np.linalg.norm(diff, axis=1, keepdims=True)
    safe = np.where(norms > SINGULAR_TOL, norms, 1.0)
    return np.where(norms > SINGULAR_TOL, diff / safe, 0.0) / n


def full_attack(policy: LinearPolicy, q: Query, q_init: Query, metric: FairItemMetric, lam: float,
                steps: int, lr: float, optimizer: str = "adam", trace: list | None = None) -> Query:
    """Ascent on ``1/2 ||h(q') - h(q)||^2 - lam * d_Q(q, q')`` starting at ``q_init``.

    The optimal transport plan is recomputed at every iterate. When
    ``trace`` is a list, the objective before each step and after the last
    one is appended to it.
    """
    if q_init.n != q.n or q_init.p != q.p:
        raise SizeMismatch("initial adversarial query must have the shape of the original")
    theta = policy.theta
    x = q.features
    x_adv = q_init.features.copy()
    opt = make_optimizer(optimizer, x_adv.shape, lr)
    for _ in range(steps):
        perm, value = solve_assignment(pairwise_distances(metric, x, x_adv))
        shift = (x_adv - x) @ theta
        if trace is not None:
            trace.append(0.5 * float(shift @ shift) - lam * value)
        grad = np.outer(shift, theta) - lam * _transport_grad(metric, x, x_adv, perm)
        x_adv = x_adv + opt.step(grad)
    q_adv = q.with_features(x_adv)
    if trace is not None:
        trace.append(attack_objective(policy, q, q_adv, metric, lam))
    return q_adv


def lambda_update(lam: float, alpha: float, rho: float, epsilon: float, mean_dq: float) -> float:
    return max(0.0, lam + alpha * rho * (epsilon - mean_dq))


def penalty_grad(policy: LinearPolicy, q: Query, q_adv: Query) -> np.ndarray:
    """Gradient in theta of ``1/2 ||h(q_adv) - h(q)||^2`` for linear scores."""
    diff = q_adv.features - q.features
    return diff.T @ (diff @ policy.theta)


def theta_gradient(policy: LinearPolicy, batch, adv, rho: float, spec: UtilitySpec, rngs, l2: float = 0.0):
    """Ascent direction for the weights averaged over the batch.

    ``adv`` may be ``None`` when ``rho == 0``. Returns ``(grad, mean_utility)``.
    """
    grad = np.zeros_like(policy.theta)
    utilities = []
    for i, q in enumerate(batch):
        g, u = utility_grad_estimate(policy, q, spec, rngs[i])
        grad += g
        utilities.append(u)
    grad /= len(batch)
    if rho > 0:
        if adv is None or len(adv) != len(batch):
            raise SizeMismatch("need one adversarial query per batch query")
        pen = np.zeros_like(grad)
        for q, qa in zip(batch, adv):
            if qa.features.shape != q.features.shape:
                raise SizeMismatch(f"adversarial query for {q.id!r} has the wrong shape")
            pen += penalty_grad(policy, q, qa)
        grad = grad - rho * pen / len(batch)
    if l2 > 0:
        grad = grad - l2 * policy.theta
    return grad, float(np.mean(utilities))


def theta_update(policy: LinearPolicy, batch, adv, cfg: TrainConfig, rngs, opt, rho: float | None = None):
    """One optimizer step on the weights. Returns ``(new_policy, mean_utility)``."""
    rho = cfg.rho if rho is None else rho
    spec = UtilitySpec("ndcg", cfg.mc_samples, use_baseline=cfg.mc_samples >= 2)
    grad, utility = theta_gradient(policy, batch, adv, rho, spec, rngs, cfg.l2)
    return LinearPolicy(policy.theta + opt.step(grad)), utility


def adversarial_query(policy: LinearPolicy, q: Query, metric: FairItemMetric, lam: float,
                      cfg: TrainConfig, rng: np.random.Generator) -> Query:
    q_sub = subspace_attack(policy, q, metric, cfg.attack_subspace_steps, cfg.attack_subspace_lr,
                            rng, cfg.attack_init_scale, cfg.optimizer)
    return full_attack(policy, q, q_sub, metric, lam, cfg.attack_full_steps, cfg.attack_full_lr, cfg.optimizer)


def init_theta(cfg: TrainConfig, p: int) -> np.ndarray:
    r = cfg.weight_init_range
    return substream(cfg.seed, "init").uniform(-r, r, size=p)


def train(cfg: TrainConfig, data: Dataset, metric: FairItemMetric | None = None, variant: str = "senstir"):
    """Train a linear Plackett-Luce policy. Returns ``(policy, history)``.

    ``senstir`` runs the regularized loop (plain updates for the first
    ``fair_start_frac`` share of steps); ``baseline`` is the same loop with
    ``rho = 0``; ``project`` trains the baseline on features with the
    sensitive subspace projected out and returns weights that apply the same
    projection to raw features; ``random`` draws standard-normal weights.
    """
    if variant not in VARIANTS:
        raise DataError(f"unknown variant {variant!r}")
    p = data.feature_dim
    history = TrainHistory()
    if variant == "random":
        return LinearPolicy(substream(cfg.seed, "init").standard_normal(p)), history
    if variant == "project":
        if metric is None:
            raise DataError("variant 'project' needs a fair metric")
        data = project_complement(metric, data)
    rho = cfg.rho if variant == "senstir" else 0.0
    if rho > 0 and metric is None:
        raise DataError("variant 'senstir' with rho > 0 needs a fair metric")
    if metric is not None and metric.dim != p:
        raise DataError(f"metric dim {metric.dim} != data dim {p}")

    policy = LinearPolicy(init_theta(cfg, p))
    lam = cfg.lambda_init
    opt = make_optimizer(cfg.optimizer, p, cfg.theta_step)
    warmup = math.floor(cfg.fair_start_frac * cfg.epochs)
    n_queries = len(data)
    batch_size = min(cfg.batch_size, n_queries)

    for t in range(cfg.epochs):
        rho_t = rho if t >= warmup else 0.0
        idx = substream(cfg.seed, "batch", t).choice(n_queries, size=batch_size, replace=False)
        batch = [data[i] for i in idx]
        adv = None
        mean_dq = 0.0
        reg = 0.0
        if rho_t > 0:
            adv = [adversarial_query(policy, q, metric, lam, cfg, substream(cfg.seed, "attack", t, i))
                   for q, i in zip(batch, idx)]
            mean_dq = float(np.mean([query_distance(metric, q, qa).value for q, qa in zip(batch, adv)]))
            reg = float(np.mean([score_divergence(policy, q, qa) for q, qa in zip(batch, adv)]))
            lam = lambda_update(lam, cfg.lambda_step, rho_t, cfg.epsilon, mean_dq)
        rngs = [substream(cfg.seed, "sampling", t, i) for i in idx]
        policy, utility = theta_update(policy, batch, adv, cfg, rngs, opt, rho=rho_t)
        history.record(utility, mean_dq, lam, reg)
        if log.isEnabledFor(logging.DEBUG) and (t + 1) % 100 == 0:
            log.debug("step %d utility %.4f dq %.4g lambda %.4g theta %s", t + 1, utility, mean_dq, lam, policy.theta)
    if variant == "project":
        # x.(P theta) == (P x).theta, so raw features score like projected ones
        policy = LinearPolicy(metric.project(policy.theta))
    return policy, history
