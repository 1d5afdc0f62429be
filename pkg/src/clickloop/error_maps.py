"""Ground-truth error maps, pseudo-click generation, and error-map subtraction."""

from dataclasses import dataclass

import numpy as np

from .clicks import Click, NEGATIVE, POSITIVE, PSEUDO
from .exceptions import ShapeMismatchError
from .masks import (
    Region,
    as_bool_mask,
    connected_components,
    distance_transform,
    region_center,
    require_same_shape,
    threshold,
)


@dataclass(frozen=True)
class ErrorMapPair:
    """Estimated false-positive and false-negative probability maps."""

    fp: np.ndarray
    fn: np.ndarray

    def __post_init__(self):
        if self.fp.shape != self.fn.shape:
            raise ShapeMismatchError(f"fp {self.fp.shape} vs fn {self.fn.shape}")


@dataclass(frozen=True)
class GroundTruthErrors:
    """Exact misclassification masks of a probability map against a ground truth."""

    m_fp: np.ndarray
    m_fn: np.ndarray


def ground_truth_error_maps(p: np.ndarray, m: np.ndarray, tau: float = 0.5) -> GroundTruthErrors:
    """FP where the mask is false but p >= tau; FN where the mask is true but p < tau."""
    p = np.asarray(p)
    m = as_bool_mask(m)
    require_same_shape(p, m)
    predicted = threshold(p, tau)
    return GroundTruthErrors(m_fp=~m & predicted, m_fn=m & ~predicted)


def select_error_click_target(
    m_fp: np.ndarray,
    m_fn: np.ndarray,
    connectivity: int = 8,
    min_area: int = 1,
) -> tuple[int, int, str] | None:
    """Center and kind ("fn" or "fp") of the largest error region across both masks.

    Largest by area; exact area ties prefer FN regions over FP, then the smaller
    bbox origin. The center is the distance-transform argmax over the mask the
    region came from. Returns None when no region of at least min_area exists.
    """
    m_fp = as_bool_mask(m_fp)
    m_fn = as_bool_mask(m_fn)
    require_same_shape(m_fp, m_fn)
    candidates: list[tuple[Region, str, np.ndarray]] = []
    for region in connected_components(m_fn, connectivity):
        candidates.append((region, "fn", m_fn))
    for region in connected_components(m_fp, connectivity):
        candidates.append((region, "fp", m_fp))
    if not candidates:
        return None
    # kind sorts "fn" < "fp", giving FN priority on exact area ties
    region, kind, mask = min(candidates, key=lambda c: (-c[0].area, c[1], c[0].bbox_origin))
    if region.area < min_area:
        return None
    row, col = region_center(region, distance_transform(mask))
    return row, col, kind


def generate_pseudo_click(
    errs: ErrorMapPair,
    tau: float = 0.5,
    min_area: int = 1,
    connectivity: int = 8,
    index: int = 0,
) -> Click | None:
    """Click at the center of the largest binarized error region, or None if none qualifies.

    Both estimate maps are binarized at tau. FN regions yield positive clicks
    (missed object), FP regions negative ones (spill to remove).
    """
    fn_mask = threshold(np.asarray(errs.fn), tau)
    fp_mask = threshold(np.asarray(errs.fp), tau)
    target = select_error_click_target(fp_mask, fn_mask, connectivity, min_area)
    if target is None:
        return None
    row, col, kind = target
    polarity = POSITIVE if kind == "fn" else NEGATIVE
    return Click(row=row, col=col, polarity=polarity, source=PSEUDO, index=index)


def subtract_error_maps(p: np.ndarray, errs: ErrorMapPair) -> np.ndarray:
    """Post-processing refinement: suppress FP probability, boost FN, clamp to [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    require_same_shape(p, errs.fp)
    return np.clip(p - errs.fp + errs.fn, 0.0, 1.0)
