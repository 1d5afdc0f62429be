"""Pluggable segmenter contract plus two desk-scale reference implementations.

A segmenter maps a SegmentationInput (image, previous mask, click encodings) to
a probability map and a pair of FP/FN error estimates. Reference segmenters are
deterministic and click-obedient: a positive click pixel comes back >= tau, a
negative one < tau, provided the clicks are not mutually contradictory.
"""

import heapq
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import ndimage

from .encoding import SegmentationInput
from .error_maps import ErrorMapPair
from .exceptions import ConfigError, InputError, ShapeMismatchError
from .masks import (
    as_bool_mask,
    connected_components,
    distance_transform,
    erode,
    largest_region,
    region_center,
)


@dataclass(frozen=True)
class SegmenterOutput:
    prob: np.ndarray
    errors: ErrorMapPair


class Segmenter(Protocol):
    def predict(self, inp: SegmentationInput) -> SegmenterOutput: ...


# ---------------------------------------------------------------------------
# Oracle segmenter: a ground-truth-aware test double
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleNoiseConfig:
    """Corruption knobs for the oracle test double.

    flip_blob_count disk-shaped regions of radius blob_radius are flipped
    against the ground truth. Blobs are sampled single-polarity (a disk fully
    inside the object becomes a false-negative blob, fully outside a
    false-positive one) and pairwise separated by at least
    min_blob_separation pixels of boundary gap, so one click can never heal
    two blobs. When anchor_first_blob is set the first blob is a
    false-negative disk centered on the object's distance-transform center,
    which is where a simulated session places its first click.
    """

    flip_blob_count: int = 3
    blob_radius: int = 4
    error_estimate_fidelity: float = 1.0
    rng_seed: int = 0
    min_blob_separation: int = 8
    anchor_first_blob: bool = True

    def __post_init__(self):
        if self.flip_blob_count < 0 or self.blob_radius < 0:
            raise ConfigError("blob count and radius must be >= 0")
        if not 0.0 <= self.error_estimate_fidelity <= 1.0:
            raise ConfigError("error_estimate_fidelity must lie in [0, 1]")


@dataclass
class _Blob:
    mask: np.ndarray
    polarity: str  # "fn" or "fp"
    fade: np.ndarray = field(repr=False, default=None)  # dt / max dt inside the blob


def _disk_mask(shape: tuple[int, int], center: tuple[int, int], radius: int) -> np.ndarray:
    rr, cc = np.ogrid[: shape[0], : shape[1]]
    return (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius * radius


class OracleSegmenter:
    """Emits the ground truth corrupted by flipped blobs; clicks heal blobs.

    predict is a pure function of the input encodings: a blob counts as healed
    exactly when some pixel of it is covered by a correcting-polarity click
    disk (positive for false-negative blobs, negative for false-positive
    ones). Emitted error estimates equal the exact errors of the emitted map
    at fidelity 1.0; below that they fade radially toward the blob edge,
    value fidelity * (dt / max dt), so the estimates still localize each blob
    while under-stating its extent.
    """

    def __init__(self, gt: np.ndarray, cfg: OracleNoiseConfig = OracleNoiseConfig()):
        self.gt = as_bool_mask(gt).copy()
        self.cfg = cfg
        self.blobs = self._sample_blobs()

    # -- corruption sampling -------------------------------------------------

    def _sample_blobs(self) -> list[_Blob]:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.rng_seed)
        blobs: list[_Blob] = []
        occupied: list[np.ndarray] = []  # (N, 2) pixel arrays of placed blobs

        def try_place(mask: np.ndarray, polarity: str) -> bool:
            if not mask.any():
                return False
            blob = _Blob(mask=mask, polarity=polarity)
            dt = distance_transform(mask)
            blob.fade = np.where(mask, dt / dt.max(), 0.0)
            blobs.append(blob)
            occupied.append(np.argwhere(mask))
            return True

        if cfg.flip_blob_count == 0:
            return blobs

        if cfg.anchor_first_blob and self.gt.any():
            regions = connected_components(self.gt, 8)
            center = region_center(largest_region(regions), distance_transform(self.gt))
            disk = _disk_mask(self.gt.shape, center, cfg.blob_radius) & self.gt
            for region in connected_components(disk, 8):
                if ((region.pixels == np.array(center)).all(axis=1)).any():
                    try_place(region.mask(self.gt.shape), "fn")
                    break

        fn_centers = np.argwhere(erode(self.gt, cfg.blob_radius))
        fp_centers = np.argwhere(erode(~self.gt, cfg.blob_radius))
        clearance = cfg.blob_radius + cfg.min_blob_separation
        tries = 0
        max_tries = 200 * max(1, cfg.flip_blob_count)
        while len(blobs) < cfg.flip_blob_count and tries < max_tries:
            tries += 1
            want_fn = bool(rng.integers(0, 2))
            pool = fn_centers if want_fn else fp_centers
            if pool.size == 0:
                pool = fp_centers if want_fn else fn_centers
                want_fn = not want_fn
                if pool.size == 0:
                    break
            center = pool[int(rng.integers(len(pool)))]
            if occupied:
                placed = np.concatenate(occupied)
                gap2 = ((placed - center) ** 2).sum(axis=1).min()
                if gap2 < clearance * clearance:
                    continue
            mask = _disk_mask(self.gt.shape, (int(center[0]), int(center[1])), cfg.blob_radius)
            try_place(mask, "fn" if want_fn else "fp")
        return blobs

    # -- prediction ----------------------------------------------------------

    def predict(self, inp: SegmentationInput) -> SegmenterOutput:
        if inp.shape != self.gt.shape:
            raise ShapeMismatchError(f"input {inp.shape} does not match gt {self.gt.shape}")
        pos = inp.human.positive | inp.pseudo.positive
        neg = inp.human.negative | inp.pseudo.negative
        prob = self.gt.astype(np.float64)
        e_fp = np.zeros_like(prob)
        e_fn = np.zeros_like(prob)
        fidelity = self.cfg.error_estimate_fidelity
        for blob in self.blobs:
            correcting = pos if blob.polarity == "fn" else neg
            if (blob.mask & correcting).any():
                continue  # healed
            estimate = 1.0 if fidelity == 1.0 else (fidelity * blob.fade)[blob.mask]
            if blob.polarity == "fn":
                prob[blob.mask] = 0.0
                e_fn[blob.mask] = estimate
            else:
                prob[blob.mask] = 1.0
                e_fp[blob.mask] = estimate
        return SegmenterOutput(prob=prob, errors=ErrorMapPair(fp=e_fp, fn=e_fn))


# ---------------------------------------------------------------------------
# Region-grow segmenter: geodesic nearest-seed labeling on real pixels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionGrowConfig:
    """intensity_weight scales the intensity term of the seed metric;
    uncertainty_band is the half-width (pixels) of the low-confidence band
    around the decision boundary used for softening and error estimates."""

    intensity_weight: float = 1.0
    uncertainty_band: int = 3

    def __post_init__(self):
        if not np.isfinite(self.intensity_weight) or self.intensity_weight < 0:
            raise ConfigError("intensity_weight must be finite and >= 0")
        if self.uncertainty_band < 0:
            raise ConfigError("uncertainty_band must be >= 0")


@dataclass(frozen=True)
class SeedRegion:
    mask: np.ndarray
    positive: bool
    order: int  # insertion order, ties in the metric resolve to the smaller


def seed_regions_from_input(inp: SegmentationInput) -> list[SeedRegion]:
    """Connected components of the click channels, in channel-major insertion order.

    Channel order is [human+, human-, pseudo+, pseudo-]; within a channel,
    regions come in raster order of their first pixel.
    """
    channels = [
        (inp.human.positive, True),
        (inp.human.negative, False),
        (inp.pseudo.positive, True),
        (inp.pseudo.negative, False),
    ]
    regions: list[SeedRegion] = []
    for channel, positive in channels:
        for comp in connected_components(channel, 8):
            regions.append(
                SeedRegion(mask=comp.mask(channel.shape), positive=positive, order=len(regions))
            )
    return regions


def _squared_distance_to(mask: np.ndarray) -> np.ndarray:
    """Exact integer squared Euclidean distance from every pixel to the mask."""
    if mask.all():
        return np.zeros(mask.shape, dtype=np.int64)
    idx = ndimage.distance_transform_edt(~mask, return_distances=False, return_indices=True)
    rr, cc = np.indices(mask.shape)
    return ((rr - idx[0]).astype(np.int64)) ** 2 + ((cc - idx[1]).astype(np.int64)) ** 2


_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _min_intensity_variation(intensity: np.ndarray, seed_mask: np.ndarray) -> np.ndarray:
    """Minimal summed |intensity step| along any 8-neighbor path from the seed set."""
    h, w = intensity.shape
    dist = np.full((h, w), np.inf)
    heap = []
    counter = 0
    for r, c in np.argwhere(seed_mask):
        dist[r, c] = 0.0
        heap.append((0.0, counter, int(r), int(c)))
        counter += 1
    heapq.heapify(heap)
    while heap:
        d, _, r, c = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        base = intensity[r, c]
        for dr, dc in _NEIGHBORS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w:
                nd = d + abs(intensity[nr, nc] - base)
                if nd < dist[nr, nc]:
                    dist[nr, nc] = nd
                    counter += 1
                    heapq.heappush(heap, (nd, counter, nr, nc))
    return dist


def geodesic_labels(
    image: np.ndarray, regions: list[SeedRegion], intensity_weight: float
) -> np.ndarray:
    """Index of the winning seed region per pixel under the seed metric.

    Metric: exact Euclidean distance to the region plus intensity_weight times
    the minimal path intensity variation (shortest path over the 8-neighbor
    graph with |intensity difference| step costs). At weight 0 this is exact
    Euclidean nearest-seed Voronoi, compared on integer squared distances.
    Ties resolve to the earliest-inserted region.
    """
    if not regions:
        raise InputError("at least one seed region required")
    shape = image.shape[:2]
    labels = np.zeros(shape, dtype=np.int32)
    if intensity_weight == 0.0:
        best = np.full(shape, np.iinfo(np.int64).max, dtype=np.int64)
        for k, region in enumerate(regions):
            sq = _squared_distance_to(region.mask)
            better = sq < best
            labels[better] = k
            best[better] = sq[better]
        return labels
    intensity = np.asarray(image, dtype=np.float64)
    if intensity.ndim == 3:
        intensity = intensity.mean(axis=2)
    best = np.full(shape, np.inf)
    for k, region in enumerate(regions):
        sq = _squared_distance_to(region.mask)
        cost = np.sqrt(sq.astype(np.float64))
        cost += intensity_weight * _min_intensity_variation(intensity, region.mask)
        better = cost < best
        labels[better] = k
        best[better] = cost[better]
    return labels


class RegionGrowSegmenter:
    """Claims pixels for the nearest click seed under a geodesic intensity metric.

    Foreground = pixels whose nearest seed is positive. The probability map is
    1 inside, 0 outside, softened linearly across uncertainty_band pixels from
    the decision boundary; the same band supplies the FP estimate on the
    foreground side and the FN estimate on the background side, at value 0.5.
    Foreground near the image border counts as boundary (over-claim suspicion);
    with no positive seed the previous mask is returned unchanged.
    """

    def __init__(self, cfg: RegionGrowConfig = RegionGrowConfig()):
        self.cfg = cfg

    def predict(self, inp: SegmentationInput) -> SegmenterOutput:
        shape = inp.shape
        zeros = np.zeros(shape, dtype=np.float64)
        if not (inp.human.positive.any() or inp.pseudo.positive.any()):
            prob = np.asarray(inp.prev_mask, dtype=np.float64).copy()
            return SegmenterOutput(prob=prob, errors=ErrorMapPair(fp=zeros, fn=zeros.copy()))
        regions = seed_regions_from_input(inp)
        labels = geodesic_labels(inp.image, regions, self.cfg.intensity_weight)
        positive_ids = np.array([r.positive for r in regions])
        fg = positive_ids[labels]
        band = self.cfg.uncertainty_band
        if band == 0:
            prob = fg.astype(np.float64)
            return SegmenterOutput(prob=prob, errors=ErrorMapPair(fp=zeros, fn=zeros.copy()))
        d_inside = distance_transform(fg)  # to nearest background-or-border pixel
        d_outside = (
            ndimage.distance_transform_edt(~fg) if not fg.all() else np.zeros(shape)
        )  # to nearest foreground pixel, borders not counted
        prob = np.where(
            fg,
            0.5 + 0.5 * np.minimum(d_inside, band) / band,
            0.5 - 0.5 * np.minimum(d_outside, band) / band,
        )
        e_fp = np.where(fg & (d_inside <= band), 0.5, 0.0)
        e_fn = np.where(~fg & (d_outside <= band) & (d_outside > 0), 0.5, 0.0)
        return SegmenterOutput(prob=prob, errors=ErrorMapPair(fp=e_fp, fn=e_fn))
