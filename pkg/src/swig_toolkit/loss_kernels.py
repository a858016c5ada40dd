"""Scalar loss kernels with analytic gradients.

The composed training objective is
    reg(L1) + focal(class) + ce(verb) + ce(ground) + sum of 3 smoothed noun CEs,
unweighted. Only the loss mathematics lives here; no parameters, no
optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LossError(ValueError):
    pass


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise LossError(f"alpha must be in (0,1], got {self.alpha}")
        if self.gamma < 0:
            raise LossError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class SmoothingParams:
    epsilon: float = 0.2

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise LossError(f"epsilon must be in [0,1), got {self.epsilon}")


@dataclass(frozen=True)
class LossParts:
    reg: float
    class_focal: float
    verb_ce: float
    ground_ce: float
    noun_ce: tuple  # one value per annotator, length 3

    def __post_init__(self):
        parts = (self.reg, self.class_focal, self.verb_ce, self.ground_ce, *self.noun_ce)
        if len(self.noun_ce) != 3:
            raise LossError(f"expected 3 noun CE terms, got {len(self.noun_ce)}")
        if any(p < 0 or not np.isfinite(p) for p in parts):
            raise LossError("all loss parts must be finite and >= 0")


def focal_loss(logits, targets, params: FocalParams = FocalParams(),
               reduction: str = "mean"):
    """Binary sigmoid focal loss; returns (loss, gradient wrt logits).

    Per element with p = sigmoid(logit):
      positive: -alpha * (1-p)^gamma * log(p)
      negative: -(1-alpha) * p^gamma * log(1-p)
    Reduction is the element mean by default; "sum" is available since
    detector implementations also normalize by positive-anchor count.
    """
    x = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.shape != t.shape:
        raise LossError(f"logits shape {x.shape} != targets shape {t.shape}")
    a, g = params.alpha, params.gamma
    p = _sigmoid(x)
    log_p = -np.logaddexp(0.0, -x)  # log sigmoid(x), stable
    log_1p = -np.logaddexp(0.0, x)  # log(1 - sigmoid(x))

    loss_pos = -a * (1 - p) ** g * log_p
    loss_neg = -(1 - a) * p ** g * log_1p
    elems = np.where(t == 1, loss_pos, loss_neg)

    # d/dx via dp/dx = p(1-p)
    grad_pos = a * (g * p * (1 - p) ** g * log_p - (1 - p) ** (g + 1))
    grad_neg = (1 - a) * (p ** (g + 1) - g * p ** g * (1 - p) * log_1p)
    grad = np.where(t == 1, grad_pos, grad_neg)

    if reduction == "mean":
        return float(elems.mean()), grad / x.size
    if reduction == "sum":
        return float(elems.sum()), grad
    raise LossError(f"unknown reduction {reduction!r}")


def smoothed_ce(logits, target_class: int, params: SmoothingParams = SmoothingParams()):
    """Label-smoothed softmax cross-entropy; returns (loss, gradient).

    The smoothed target puts 1-epsilon on the target class and
    epsilon/(K-1) on each other class; gradient is softmax - target.
    """
    x = np.asarray(logits, dtype=np.float64)
    k = x.size
    if k < 2:
        raise LossError("smoothed_ce needs at least 2 classes")
    if not 0 <= target_class < k:
        raise LossError(f"target class {target_class} out of range for {k} classes")
    eps = params.epsilon
    q = np.full(k, eps / (k - 1))
    q[target_class] = 1 - eps
    log_softmax = x - _logsumexp(x)
    loss = float(-(q * log_softmax).sum())
    grad = np.exp(log_softmax) - q
    return loss, grad


def l1_reg(pred, target):
    """Mean absolute error; returns (loss, subgradient wrt pred)."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise LossError(f"pred shape {p.shape} != target shape {t.shape}")
    loss = float(np.abs(p - t).mean())
    return loss, np.sign(p - t) / p.size


def total_loss(parts: LossParts) -> float:
    """Unweighted sum of all objective parts."""
    return parts.reg + parts.class_focal + parts.verb_ce + parts.ground_ce + sum(parts.noun_ce)


def _sigmoid(x):
    return np.where(x >= 0, 1 / (1 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1 + np.exp(-np.abs(x))))


def _logsumexp(x):
    m = x.max()
    return m + np.log(np.exp(x - m).sum())
