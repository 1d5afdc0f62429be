"""Segmentation losses with analytic gradients with respect to the probability maps.

Every loss reads probabilities through p_t, the probability assigned to the
correct class (p where the target is true, 1-p where false), clamped to
[eps, 1-eps]. Gradients are zero at clamped pixels (the clamp is flat there).
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .error_maps import ErrorMapPair, ground_truth_error_maps
from .exceptions import ConfigError
from .masks import as_bool_mask, require_same_shape

Normalization = Literal["sum_pt", "sum_focal"]


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 0.5
    lambda3: float = 0.5
    gamma: float = 2.0
    tau: float = 0.5
    eps: float = 1e-7

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3, self.gamma) <= 0:
            raise ConfigError("loss weights and gamma must be strictly positive")
        if not 0 < self.tau < 1:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0 < self.eps < 1e-3:
            raise ConfigError(f"eps must lie in (0, 1e-3), got {self.eps}")


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class CombinedLossResult:
    value: float
    grad_prob: np.ndarray
    grad_fp: np.ndarray
    grad_fn: np.ndarray


def _correct_class(p: np.ndarray, target: np.ndarray, eps: float):
    """p_t and its derivative dp_t/dp (+-1, zeroed where the clamp is active)."""
    p = np.asarray(p, dtype=np.float64)
    target = as_bool_mask(target)
    require_same_shape(p, target)
    raw = np.where(target, p, 1.0 - p)
    pt = np.clip(raw, eps, 1.0 - eps)
    dpt_dp = np.where(target, 1.0, -1.0) * ((raw >= eps) & (raw <= 1.0 - eps))
    return pt, dpt_dp


def nfl(
    p: np.ndarray,
    target: np.ndarray,
    gamma: float = 2.0,
    eps: float = 1e-7,
    normalization: Normalization = "sum_pt",
) -> LossResult:
    """Normalized focal loss: sum of -(1/Z) * (1-p_t)^gamma * log(p_t).

    normalization selects Z: "sum_pt" divides by the summed correct-class
    probability (the default), "sum_focal" by the summed focal factors
    (1-p_t)^gamma. Z depends on p, and the gradient includes that term.
    """
    if gamma <= 0:
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    pt, dpt_dp = _correct_class(p, target, eps)
    focal = (1.0 - pt) ** gamma
    log_pt = np.log(pt)
    summand = focal * log_pt  # <= 0
    s = summand.sum()
    d_summand = -gamma * (1.0 - pt) ** (gamma - 1.0) * log_pt + focal / pt
    if normalization == "sum_pt":
        z = pt.sum()
        dz = np.ones_like(pt)
    elif normalization == "sum_focal":
        z = focal.sum()
        dz = -gamma * (1.0 - pt) ** (gamma - 1.0)
    else:
        raise ConfigError(f"unknown normalization {normalization!r}")
    value = -s / z
    grad_pt = -d_summand / z + s * dz / (z * z)
    return LossResult(value=float(value), grad=grad_pt * dpt_dp)


def bce(p: np.ndarray, target: np.ndarray, eps: float = 1e-7) -> LossResult:
    """Binary cross entropy: mean of -log(p_t)."""
    pt, dpt_dp = _correct_class(p, target, eps)
    n = pt.size
    value = float(-np.log(pt).mean())
    grad_pt = -1.0 / (n * pt)
    return LossResult(value=value, grad=grad_pt * dpt_dp)


def fl(p: np.ndarray, target: np.ndarray, gamma: float = 2.0, eps: float = 1e-7) -> LossResult:
    """Focal loss: mean of -(1-p_t)^gamma * log(p_t)."""
    if gamma <= 0:
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    pt, dpt_dp = _correct_class(p, target, eps)
    n = pt.size
    log_pt = np.log(pt)
    value = float(-((1.0 - pt) ** gamma * log_pt).mean())
    grad_pt = (gamma * (1.0 - pt) ** (gamma - 1.0) * log_pt - (1.0 - pt) ** gamma / pt) / n
    return LossResult(value=value, grad=grad_pt * dpt_dp)


def soft_iou(p: np.ndarray, target: np.ndarray) -> LossResult:
    """Soft IoU loss: 1 - sum(p*t) / (sum(p) + sum(t) - sum(p*t)); 0 when both are empty."""
    p = np.asarray(p, dtype=np.float64)
    target = as_bool_mask(target)
    require_same_shape(p, target)
    t = target.astype(np.float64)
    inter = float((p * t).sum())
    union = float(p.sum() + t.sum() - inter)
    if union == 0.0:
        return LossResult(value=0.0, grad=np.zeros_like(p))
    value = 1.0 - inter / union
    grad = -(t * union - inter * (1.0 - t)) / (union * union)
    return LossResult(value=float(value), grad=grad)


def combined_loss(
    p: np.ndarray,
    errs: ErrorMapPair,
    m: np.ndarray,
    w: LossWeights = LossWeights(),
    normalization: Normalization = "sum_pt",
) -> CombinedLossResult:
    """Weighted sum of three NFL heads: segmentation, FP estimate, FN estimate.

    The FP/FN targets are thresholded from (p, m, tau) and treated as constants;
    no gradient flows through the thresholding.
    """
    gte = ground_truth_error_maps(p, m, w.tau)
    head_p = nfl(p, m, w.gamma, w.eps, normalization)
    head_fp = nfl(errs.fp, gte.m_fp, w.gamma, w.eps, normalization)
    head_fn = nfl(errs.fn, gte.m_fn, w.gamma, w.eps, normalization)
    value = w.lambda1 * head_p.value + w.lambda2 * head_fp.value + w.lambda3 * head_fn.value
    return CombinedLossResult(
        value=float(value),
        grad_prob=w.lambda1 * head_p.grad,
        grad_fp=w.lambda2 * head_fp.grad,
        grad_fn=w.lambda3 * head_fn.grad,
    )
