"""Interaction state machine: human click, forward pass, pseudo-click refinement.

Click-simulation strategies for automatic evaluation live here too: the
iterative simulator always clicks the center of the largest misclassified
region, the random strategy samples unordered click sets away from mask
boundaries. Random-strategy defaults (boundary margin 5 px, pairwise minimum
distance 10 px, 50 retries before relaxing) follow the common NoC protocol.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .clicks import Click, HUMAN, NEGATIVE, POSITIVE
from .encoding import DiskEncoding, SegmentationInput, add_click, empty_encoding, new_input
from .error_maps import (
    ground_truth_error_maps,
    generate_pseudo_click,
    select_error_click_target,
    subtract_error_maps,
)
from .exceptions import ConfigError, InputError
from .masks import as_bool_mask, erode, iou, threshold
from .segmenters import Segmenter, SegmenterOutput

RANDOM_MARGIN = 5
RANDOM_MIN_DISTANCE = 10
RANDOM_RETRIES = 50

REFINEMENT_MODES = ("pseudo_click", "post_process", "none")


@dataclass(frozen=True)
class SessionConfig:
    tau: float = 0.5
    disk_radius: int = 5
    pseudo_clicks_per_round: int = 1
    refinement_mode: str = "pseudo_click"
    click_budget: int = 20
    target_ious: tuple[float, ...] = (0.85, 0.90)
    connectivity: int = 8
    min_error_area: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if self.refinement_mode not in REFINEMENT_MODES:
            raise ConfigError(f"refinement_mode must be one of {REFINEMENT_MODES}")
        if self.click_budget < 1:
            raise ConfigError("click_budget must be >= 1")
        if self.disk_radius < 0 or self.pseudo_clicks_per_round < 0 or self.min_error_area < 0:
            raise ConfigError("disk_radius, pseudo_clicks_per_round, min_error_area must be >= 0")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        targets = tuple(self.target_ious)
        if not targets or any(not 0 < t <= 1 for t in targets):
            raise ConfigError("target_ious must be nonempty ratios in (0, 1]")
        if any(b <= a for a, b in zip(targets, targets[1:])):
            raise ConfigError("target_ious must be strictly increasing")
        object.__setattr__(self, "target_ious", targets)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target_ious"] = list(self.target_ious)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "target_ious" in d:
            d = dict(d, target_ious=tuple(d["target_ious"]))
        return cls(**d)

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class SessionState:
    image: np.ndarray
    gt: np.ndarray | None
    human_clicks: list[Click]
    pseudo_clicks: list[Click]
    human_enc: DiskEncoding
    pseudo_enc: DiskEncoding
    prev_mask: np.ndarray
    current: SegmenterOutput | None
    round: int


@dataclass(frozen=True)
class RoundResult:
    round: int
    human_click: Click
    pseudo_clicks: tuple[Click, ...]
    output: SegmenterOutput
    mask_before: np.ndarray
    mask_after: np.ndarray
    iou_initial: float | None
    iou_refined: float | None


@dataclass(frozen=True)
class SessionTrace:
    instance_id: str
    rounds: tuple[RoundResult, ...]
    final_mask: np.ndarray
    config: SessionConfig

    def round_end_ious(self) -> list[float]:
        return [r.iou_refined for r in self.rounds]


def prepare_image(image: np.ndarray) -> np.ndarray:
    """(H, W, 3) float32 in [0, 1]; integer inputs rescaled, grayscale replicated."""
    image = np.asarray(image)
    if np.issubdtype(image.dtype, np.integer):
        image = image.astype(np.float32) / 255.0
    image = image.astype(np.float32)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    if image.ndim != 3:
        raise InputError(f"image must be 2D or 3D, got shape {image.shape}")
    return image


def new_session(
    image: np.ndarray, gt: np.ndarray | None, cfg: SessionConfig
) -> SessionState:
    image = prepare_image(image)
    shape = image.shape[:2]
    if gt is not None:
        gt = as_bool_mask(gt)
        if gt.shape != shape:
            raise InputError(f"gt shape {gt.shape} does not match image {shape}")
    return SessionState(
        image=image,
        gt=gt,
        human_clicks=[],
        pseudo_clicks=[],
        human_enc=empty_encoding(shape, cfg.disk_radius, "human"),
        pseudo_enc=empty_encoding(shape, cfg.disk_radius, "pseudo"),
        prev_mask=np.zeros(shape, dtype=np.float32),
        current=None,
        round=0,
    )


def _input_of(state: SessionState) -> SegmentationInput:
    return new_input(state.image, state.prev_mask, state.human_enc, state.pseudo_enc)


def apply_human_click(
    state: SessionState, click: Click, seg: Segmenter, cfg: SessionConfig
) -> RoundResult:
    """One interaction round: encode the click, predict, refine, update state."""
    if click.source != HUMAN:
        raise InputError(f"apply_human_click requires a human click, got {click.source!r}")
    click = replace(click, index=state.round)
    state.human_enc = add_click(state.human_enc, click)  # validates bounds
    state.human_clicks.append(click)

    out = seg.predict(_input_of(state))
    mask_before = threshold(out.prob, cfg.tau)
    iou_initial = iou(mask_before, state.gt) if state.gt is not None else None

    placed: list[Click] = []
    if cfg.refinement_mode == "pseudo_click":
        for _ in range(cfg.pseudo_clicks_per_round):
            pseudo = generate_pseudo_click(
                out.errors, cfg.tau, cfg.min_error_area, cfg.connectivity, index=state.round
            )
            if pseudo is None:
                break
            state.pseudo_enc = add_click(state.pseudo_enc, pseudo)
            state.pseudo_clicks.append(pseudo)
            placed.append(pseudo)
            state.prev_mask = out.prob
            out = seg.predict(_input_of(state))
    elif cfg.refinement_mode == "post_process":
        out = SegmenterOutput(
            prob=subtract_error_maps(out.prob, out.errors), errors=out.errors
        )

    mask_after = threshold(out.prob, cfg.tau)
    iou_refined = iou(mask_after, state.gt) if state.gt is not None else None
    state.prev_mask = out.prob
    state.current = out
    result = RoundResult(
        round=state.round,
        human_click=click,
        pseudo_clicks=tuple(placed),
        output=out,
        mask_before=mask_before,
        mask_after=mask_after,
        iou_initial=iou_initial,
        iou_refined=iou_refined,
    )
    state.round += 1
    return result


def iterative_next_click(prob: np.ndarray, gt: np.ndarray, cfg: SessionConfig) -> Click | None:
    """Simulated human: click the center of the largest misclassified region.

    Positive on the largest false-negative region, negative on a false-positive
    one; same region selection and tie-breaks as pseudo-click generation.
    Returns None when the thresholded prediction already matches gt.
    """
    errs = ground_truth_error_maps(prob, gt, cfg.tau)
    target = select_error_click_target(errs.m_fp, errs.m_fn, cfg.connectivity, min_area=1)
    if target is None:
        return None
    row, col, kind = target
    polarity = POSITIVE if kind == "fn" else NEGATIVE
    return Click(row=row, col=col, polarity=polarity, source=HUMAN)


def random_click_set(
    gt: np.ndarray,
    rng: np.random.Generator,
    margin: int = RANDOM_MARGIN,
    d_min: int = RANDOM_MIN_DISTANCE,
    retries: int = RANDOM_RETRIES,
) -> list[Click]:
    """Unordered seeded click set: 1-10 positives inside gt, 0-10 negatives outside.

    Clicks are drawn from the masks eroded by margin (falling back to the raw
    masks when erosion empties them) and kept at least d_min apart where
    feasible; after `retries` failed draws the distance constraint is relaxed.
    """
    gt = as_bool_mask(gt)
    if not gt.any():
        raise InputError("gt is empty")
    n_pos = int(rng.integers(1, 11))
    n_neg = int(rng.integers(0, 11))
    pos_pool = np.argwhere(erode(gt, margin))
    if pos_pool.size == 0:
        pos_pool = np.argwhere(gt)
    neg_pool = np.argwhere(erode(~gt, margin))
    if neg_pool.size == 0:
        neg_pool = np.argwhere(~gt)

    accepted: list[tuple[int, int]] = []
    clicks: list[Click] = []

    def draw(pool: np.ndarray, polarity: str) -> None:
        if pool.size == 0:
            return
        for attempt in range(retries + 1):
            r, c = pool[int(rng.integers(len(pool)))]
            ok = all((r - ar) ** 2 + (c - ac) ** 2 >= d_min * d_min for ar, ac in accepted)
            if ok or attempt == retries:
                accepted.append((int(r), int(c)))
                clicks.append(Click(row=int(r), col=int(c), polarity=polarity, source=HUMAN))
                return

    for _ in range(n_pos):
        draw(pos_pool, POSITIVE)
    for _ in range(n_neg):
        draw(neg_pool, NEGATIVE)
    return clicks


def run_simulated_session(
    image: np.ndarray,
    gt: np.ndarray,
    seg: Segmenter,
    cfg: SessionConfig,
    instance_id: str = "",
) -> SessionTrace:
    """Iterative click simulation until IoU reaches max(target_ious) or the budget."""
    gt = as_bool_mask(gt)
    if not gt.any():
        raise InputError("gt is empty")
    state = new_session(image, gt, cfg)
    max_target = max(cfg.target_ious)
    rounds: list[RoundResult] = []
    while len(state.human_clicks) < cfg.click_budget:
        click = iterative_next_click(state.prev_mask, gt, cfg)
        if click is None:
            break
        result = apply_human_click(state, click, seg, cfg)
        rounds.append(result)
        if result.iou_refined >= max_target:
            break
    return SessionTrace(
        instance_id=instance_id,
        rounds=tuple(rounds),
        final_mask=threshold(state.prev_mask, cfg.tau),
        config=cfg,
    )


def replay_human_clicks(
    image: np.ndarray,
    gt: np.ndarray | None,
    clicks: list[Click],
    seg: Segmenter,
    cfg: SessionConfig,
) -> tuple[SessionState, list[RoundResult]]:
    """Fresh state with the given human clicks re-applied in order.

    Pseudo clicks are regenerated by the refinement loop; segmenter determinism
    makes the result identical to the original sequence of rounds.
    """
    state = new_session(image, gt, cfg)
    results = []
    for click in clicks:
        results.append(apply_human_click(state, replace(click, source=HUMAN), seg, cfg))
    return state, results
