"""Run-length encoding of binary masks over row-major order.

Wire form: {"size": [height, width], "counts": [n0, n1, ...]} where counts
alternate run lengths starting with a background (false) run; n0 may be 0 for
masks that start with foreground. The sum of counts equals height * width.
"""

import numpy as np

from .exceptions import InputError


def encode_mask(mask: np.ndarray) -> dict:
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise InputError(f"mask must be 2D, got shape {mask.shape}")
    flat = mask.ravel()
    counts = []
    if flat.size:
        changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
        boundaries = np.concatenate(([0], changes, [flat.size]))
        runs = np.diff(boundaries).tolist()
        if flat[0]:
            counts.append(0)
        counts.extend(int(r) for r in runs)
    return {"size": [int(mask.shape[0]), int(mask.shape[1])], "counts": counts}


def decode_mask(rle: dict) -> np.ndarray:
    try:
        h, w = (int(v) for v in rle["size"])
        counts = [int(c) for c in rle["counts"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed RLE: {exc}") from exc
    if h < 1 or w < 1:
        raise InputError(f"malformed RLE size {h}x{w}")
    if any(c < 0 for c in counts):
        raise InputError("malformed RLE: negative run length")
    if sum(counts) != h * w:
        raise InputError(f"RLE runs sum to {sum(counts)}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)
