"""Independent brute-force oracles for the test suite.

Everything here is written from first principles over plain numpy arrays and
Python loops: no imports from the package under test, so implementation bugs
cannot leak into the expected values.
"""

import math

import numpy as np


def flood_fill_components(mask: np.ndarray, connectivity: int) -> list[list[tuple[int, int]]]:
    """Connected components by BFS, discovered in raster order; pixels raster-sorted."""
    h, w = mask.shape
    if connectivity == 4:
        offsets = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    else:
        offsets = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    seen = np.zeros((h, w), dtype=bool)
    components = []
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or seen[r, c]:
                continue
            queue = [(r, c)]
            seen[r, c] = True
            pixels = []
            while queue:
                cr, cc = queue.pop()
                pixels.append((cr, cc))
                for dr, dc in offsets:
                    nr, nc = cr + dr, cc + dc
                    if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        queue.append((nr, nc))
            components.append(sorted(pixels))
    return components


def brute_distance_to_false(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest false pixel, border counted as false."""
    h, w = mask.shape
    false_pixels = [(r, c) for r in range(h) for c in range(w) if not mask[r, c]]
    out = np.zeros((h, w), dtype=np.float64)
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            best = min(r + 1, h - r, c + 1, w - c) ** 2
            for fr, fc in false_pixels:
                d = (r - fr) ** 2 + (c - fc) ** 2
                if d < best:
                    best = d
            out[r, c] = math.sqrt(best)
    return out


def brute_disk(shape: tuple[int, int], row: int, col: int, radius: int) -> np.ndarray:
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    for r in range(h):
        for c in range(w):
            if (r - row) ** 2 + (c - col) ** 2 <= radius * radius:
                out[r, c] = True
    return out


def brute_error_maps(p: np.ndarray, m: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel literal evaluation of the two misclassification definitions."""
    h, w = m.shape
    fp = np.zeros((h, w), dtype=bool)
    fn = np.zeros((h, w), dtype=bool)
    p_rows = p.tolist()
    m_rows = m.tolist()
    for r in range(h):
        for c in range(w):
            predicted = p_rows[r][c] >= tau
            actual = m_rows[r][c]
            fp[r, c] = (not actual) and predicted
            fn[r, c] = actual and (not predicted)
    return fp, fn


def brute_click_target(
    m_fp: np.ndarray, m_fn: np.ndarray, connectivity: int = 8, min_area: int = 1
) -> tuple[int, int, str] | None:
    """Exhaustive re-derivation of the documented click-target rules.

    Largest area wins; exact ties prefer FN over FP, then the smaller bbox
    origin. Center = argmax of the brute-force distance transform of the
    source mask over the region's pixels, lexicographic tie-break.
    """
    candidates = []
    for kind, mask in (("fn", m_fn), ("fp", m_fp)):
        for pixels in flood_fill_components(mask, connectivity):
            origin = (min(p[0] for p in pixels), min(p[1] for p in pixels))
            candidates.append((-len(pixels), kind, origin, pixels, mask))
    if not candidates:
        return None
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    neg_area, kind, _origin, pixels, mask = candidates[0]
    if -neg_area < min_area:
        return None
    dt = brute_distance_to_false(mask)
    best_pixel = None
    best_value = -1.0
    for r, c in pixels:  # raster-sorted, so first strict max is the lexicographic min
        if dt[r, c] > best_value:
            best_value = dt[r, c]
            best_pixel = (r, c)
    return best_pixel[0], best_pixel[1], kind


def brute_voronoi_labels(
    seeds: list[list[tuple[int, int]]], shape: tuple[int, int]
) -> np.ndarray:
    """Nearest-seed labels (integer squared distances); earliest seed wins ties."""
    h, w = shape
    labels = np.full((h, w), -1, dtype=np.int64)
    for r in range(h):
        for c in range(w):
            best_d = None
            best_i = -1
            for i, pixels in enumerate(seeds):
                d = min((r - sr) ** 2 + (c - sc) ** 2 for sr, sc in pixels)
                if best_d is None or d < best_d:
                    best_d = d
                    best_i = i
            labels[r, c] = best_i
    return labels


def fd_gradient(fn, p: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a map."""
    grad = np.zeros_like(p, dtype=np.float64)
    it = np.nditer(p, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        hi = p.copy()
        hi[idx] += step
        lo = p.copy()
        lo[idx] -= step
        grad[idx] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def brute_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = 0
    union = 0
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            if a[r, c] and b[r, c]:
                inter += 1
            if a[r, c] or b[r, c]:
                union += 1
    return 1.0 if union == 0 else inter / union
