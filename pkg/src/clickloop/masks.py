"""Binary mask primitives: IoU, connected regions, exact distance transform, erosion."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import ConfigError, InputError, ShapeMismatchError

PixelCoord = tuple[int, int]

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Region:
    """One connected component of a binary mask."""

    label: int
    pixels: np.ndarray  # (N, 2) int array of (row, col), raster order
    area: int
    bbox_origin: PixelCoord

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        out[self.pixels[:, 0], self.pixels[:, 1]] = True
        return out


def as_bool_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.size == 0:
        raise ShapeMismatchError(f"mask must be a nonempty 2D grid, got shape {mask.shape}")
    return mask.astype(bool, copy=False)


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary masks; both empty counts as 1.0."""
    a = as_bool_mask(a)
    b = as_bool_mask(b)
    require_same_shape(a, b)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def threshold(p: np.ndarray, tau: float) -> np.ndarray:
    """Binarize a probability map; pixels >= tau are true."""
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    p = np.asarray(p)
    if p.ndim != 2:
        raise ShapeMismatchError(f"probability map must be 2D, got shape {p.shape}")
    return p >= tau


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[Region]:
    """Connected regions of the true pixels, labeled 1..K in raster-scan discovery order."""
    mask = as_bool_mask(mask)
    if connectivity not in (4, 8):
        raise ConfigError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCT_8 if connectivity == 8 else _STRUCT_4
    labeled, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return []
    # scipy's label order is an implementation detail; relabel by first raster pixel.
    order = []
    for raw in range(1, count + 1):
        rows, cols = np.nonzero(labeled == raw)
        first = int(rows[0]) * mask.shape[1] + int(cols[0])
        order.append((first, raw, rows, cols))
    order.sort(key=lambda item: item[0])
    regions = []
    for new_label, (_, _, rows, cols) in enumerate(order, start=1):
        pixels = np.stack([rows, cols], axis=1).astype(int)
        regions.append(
            Region(
                label=new_label,
                pixels=pixels,
                area=int(pixels.shape[0]),
                bbox_origin=(int(rows.min()), int(cols.min())),
            )
        )
    return regions


def largest_region(regions: list[Region]) -> Region | None:
    """Region of maximal area; ties go to the lexicographically smallest bbox origin."""
    if not regions:
        return None
    return min(regions, key=lambda r: (-r.area, r.bbox_origin))


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest false pixel, image border treated as false."""
    mask = as_bool_mask(mask)
    padded = np.pad(mask, 1, constant_values=False)
    return ndimage.distance_transform_edt(padded)[1:-1, 1:-1]


def region_center(region: Region, dt: np.ndarray) -> PixelCoord:
    """Region pixel with maximal distance-transform value; ties break to smallest (row, col)."""
    if region.area < 1:
        raise InputError("region is empty")
    values = dt[region.pixels[:, 0], region.pixels[:, 1]]
    best = np.flatnonzero(values == values.max())
    row, col = region.pixels[best[0]]  # pixels are raster ordered, so first max is lexicographic min
    return int(row), int(col)


def erode(mask: np.ndarray, radius: float) -> np.ndarray:
    """True where the distance transform exceeds radius (border-as-false convention)."""
    if radius < 0:
        raise ConfigError(f"radius must be >= 0, got {radius}")
    return distance_transform(mask) > radius
