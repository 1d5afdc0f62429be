"""Dataset loading and seeded synthetic instance generation.

On-disk layout: `<root>/images/<id>.png` (or `.ppm`) paired with
`<root>/masks/<id>.png`, mask single-channel with values >= 128 read as
foreground. Synthetic instances are generated from a compact spec string
(rectangles, ellipses, rings on low-contrast backgrounds) with exact masks.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import ConfigError, InputError
from .masks import as_bool_mask

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm")
MASK_FOREGROUND_MIN = 128


@dataclass(frozen=True)
class Instance:
    id: str
    image: np.ndarray
    gt: np.ndarray

    def __post_init__(self):
        gt = as_bool_mask(self.gt)
        if self.image.shape[:2] != gt.shape:
            raise InputError(
                f"instance {self.id!r}: image {self.image.shape[:2]} vs gt {gt.shape}"
            )
        object.__setattr__(self, "gt", gt)


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise InputError(f"unreadable image file {path}: {exc}") from exc
    return arr


def _read_mask(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
    except (UnidentifiedImageError, OSError) as exc:
        raise InputError(f"unreadable mask file {path}: {exc}") from exc
    return arr >= MASK_FOREGROUND_MIN


def load_dataset(root: str | Path) -> list[Instance]:
    """Pairs images/<id>.png|.ppm with masks/<id>.png, sorted by id.

    Missing counterparts and empty masks are skipped with a warning;
    unreadable files are fatal.
    """
    root = Path(root)
    images_dir = root / "images"
    masks_dir = root / "masks"
    if not images_dir.is_dir():
        raise InputError(f"dataset has no images/ directory under {root}")
    instances = []
    image_paths = sorted(
        (p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.stem,
    )
    for image_path in image_paths:
        mask_path = masks_dir / f"{image_path.stem}.png"
        if not mask_path.is_file():
            log.warning("skipping %s: no mask at %s", image_path.name, mask_path)
            continue
        image = _read_image(image_path)
        gt = _read_mask(mask_path)
        if image.shape[:2] != gt.shape:
            log.warning(
                "skipping %s: image %s vs mask %s", image_path.stem, image.shape[:2], gt.shape
            )
            continue
        if not gt.any():
            log.warning("skipping %s: empty mask", image_path.stem)
            continue
        instances.append(Instance(id=image_path.stem, image=image, gt=gt))
    return instances


SHAPE_KINDS = ("rect", "ellipse", "ring")


@dataclass(frozen=True)
class SynthSpec:
    count: int = 20
    size: int = 64
    shapes: tuple[str, ...] = SHAPE_KINDS
    seed: int = 0
    contrast: float = 0.5

    def __post_init__(self):
        if self.size < 16:
            raise ConfigError(f"size must be >= 16, got {self.size}")
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if not 0 < self.contrast <= 1:
            raise ConfigError(f"contrast must lie in (0, 1], got {self.contrast}")
        bad = [s for s in self.shapes if s not in SHAPE_KINDS]
        if bad:
            raise ConfigError(f"unknown shapes {bad}, choose from {SHAPE_KINDS}")


def parse_synth_spec(text: str, default_seed: int = 0) -> SynthSpec:
    """Parses `key=value` pairs separated by commas.

    Keys: count, size, seed, contrast, shapes (separated by `+`).
    Example: `count=50,size=64,shapes=rect+ring,seed=7`.
    """
    kwargs: dict = {"seed": default_seed}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ConfigError(f"synth spec item {part!r} is not key=value")
        key, value = part.split("=", 1)
        key = key.strip()
        if key in ("count", "size", "seed"):
            kwargs[key] = int(value)
        elif key == "contrast":
            kwargs[key] = float(value)
        elif key == "shapes":
            kwargs[key] = tuple(s.strip() for s in value.split("+") if s.strip())
        else:
            raise ConfigError(f"unknown synth spec key {key!r}")
    return SynthSpec(**kwargs)


def _ellipse_mask(size: int, center: tuple[float, float], axes: tuple[float, float]) -> np.ndarray:
    rr, cc = np.mgrid[0:size, 0:size]
    cy, cx = center
    ay, ax = axes
    return ((rr - cy) / ay) ** 2 + ((cc - cx) / ax) ** 2 <= 1.0


def _synth_gt(kind: str, size: int, rng: np.random.Generator) -> np.ndarray:
    margin = max(2, size // 8)
    lo, hi = margin, size - margin
    if kind == "rect":
        h = int(rng.integers(size // 4, max(size // 4 + 1, (hi - lo) - 1)))
        w = int(rng.integers(size // 4, max(size // 4 + 1, (hi - lo) - 1)))
        top = int(rng.integers(lo, max(lo + 1, hi - h)))
        left = int(rng.integers(lo, max(lo + 1, hi - w)))
        gt = np.zeros((size, size), dtype=bool)
        gt[top : top + h, left : left + w] = True
        return gt
    cy = float(rng.uniform(size * 0.35, size * 0.65))
    cx = float(rng.uniform(size * 0.35, size * 0.65))
    ay = float(rng.uniform(size * 0.15, size * 0.3))
    ax = float(rng.uniform(size * 0.15, size * 0.3))
    outer = _ellipse_mask(size, (cy, cx), (ay, ax))
    if kind == "ellipse":
        return outer
    inner = _ellipse_mask(size, (cy, cx), (max(1.5, ay * 0.45), max(1.5, ax * 0.45)))
    return outer & ~inner


def synth_dataset(spec: SynthSpec) -> list[Instance]:
    """Seeded images of simple shapes with analytically exact masks."""
    instances = []
    for i in range(spec.count):
        rng = np.random.default_rng([spec.seed, i])
        kind = spec.shapes[i % len(spec.shapes)]
        gt = _synth_gt(kind, spec.size, rng)
        bg = float(rng.uniform(0.15, 0.45))
        fg = min(1.0, bg + spec.contrast)
        image = np.full((spec.size, spec.size), bg, dtype=np.float32)
        image[gt] = fg
        image += rng.normal(0.0, 0.01, image.shape).astype(np.float32)
        image = np.clip(image, 0.0, 1.0)
        rgb = np.repeat((image * 255).astype(np.uint8)[:, :, None], 3, axis=2)
        instances.append(Instance(id=f"synth-{kind}-{i:04d}", image=rgb, gt=gt))
    return instances
