"""Disk-map click encodings: human and pseudo clicks kept in separate 2-channel masks."""

from dataclasses import dataclass, replace

import numpy as np

from .clicks import Click, Source
from .exceptions import InputError, OutOfBoundsError, ShapeMismatchError
from .masks import require_same_shape


@dataclass(frozen=True)
class DiskEncoding:
    """2-channel binary disk rasterization of one click source."""

    positive: np.ndarray
    negative: np.ndarray
    source: Source
    radius: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.positive.shape


@dataclass(frozen=True)
class SegmentationInput:
    """Everything a segmenter sees for one forward pass."""

    image: np.ndarray  # (H, W, C) float32 in [0, 1]
    prev_mask: np.ndarray  # (H, W) float32, all-zero before the first pass
    human: DiskEncoding
    pseudo: DiskEncoding

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[0], self.image.shape[1]


def _check_bounds(click: Click, shape: tuple[int, int]) -> None:
    h, w = shape
    if not (0 <= click.row < h and 0 <= click.col < w):
        raise OutOfBoundsError(f"click ({click.row}, {click.col}) outside {h}x{w} grid")


def _stamp_disk(channel: np.ndarray, row: int, col: int, radius: int) -> None:
    h, w = channel.shape
    r0, r1 = max(0, row - radius), min(h, row + radius + 1)
    c0, c1 = max(0, col - radius), min(w, col + radius + 1)
    rr, cc = np.ogrid[r0:r1, c0:c1]
    channel[r0:r1, c0:c1] |= (rr - row) ** 2 + (cc - col) ** 2 <= radius * radius


def encode_clicks(
    clicks: list[Click],
    shape: tuple[int, int],
    radius: int,
    source_filter: Source,
) -> DiskEncoding:
    """Rasterize every click of the given source as a filled disk in its polarity channel."""
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    positive = np.zeros(shape, dtype=bool)
    negative = np.zeros(shape, dtype=bool)
    for click in clicks:
        if click.source != source_filter:
            continue
        _check_bounds(click, shape)
        channel = positive if click.polarity == "positive" else negative
        _stamp_disk(channel, click.row, click.col, radius)
    return DiskEncoding(positive=positive, negative=negative, source=source_filter, radius=radius)


def empty_encoding(shape: tuple[int, int], radius: int, source: Source) -> DiskEncoding:
    return encode_clicks([], shape, radius, source)


def add_click(enc: DiskEncoding, click: Click) -> DiskEncoding:
    """New encoding with one more disk stamped; equals re-encoding the full click list."""
    if click.source != enc.source:
        raise InputError(f"click source {click.source!r} does not match encoding {enc.source!r}")
    _check_bounds(click, enc.shape)
    if click.polarity == "positive":
        channel = enc.positive.copy()
        _stamp_disk(channel, click.row, click.col, enc.radius)
        return replace(enc, positive=channel)
    channel = enc.negative.copy()
    _stamp_disk(channel, click.row, click.col, enc.radius)
    return replace(enc, negative=channel)


def merge_encodings(human: DiskEncoding, pseudo: DiskEncoding) -> np.ndarray:
    """Stack to a (4, H, W) float grid ordered [human+, human-, pseudo+, pseudo-]."""
    require_same_shape(human.positive, pseudo.positive)
    return np.stack(
        [human.positive, human.negative, pseudo.positive, pseudo.negative]
    ).astype(np.float32)


def new_input(
    image: np.ndarray,
    prev_mask: np.ndarray,
    human: DiskEncoding,
    pseudo: DiskEncoding,
) -> SegmentationInput:
    """Validated SegmentationInput; image (H, W, C), all spatial shapes equal."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    if image.ndim != 3:
        raise ShapeMismatchError(f"image must be (H, W, C), got shape {image.shape}")
    spatial = image.shape[:2]
    prev_mask = np.asarray(prev_mask, dtype=np.float32)
    if prev_mask.shape != spatial:
        raise ShapeMismatchError(f"prev_mask shape {prev_mask.shape} != image {spatial}")
    if human.shape != spatial or pseudo.shape != spatial:
        raise ShapeMismatchError("click encodings do not match image shape")
    return SegmentationInput(image=image, prev_mask=prev_mask, human=human, pseudo=pseudo)
