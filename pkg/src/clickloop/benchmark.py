"""Benchmark execution and report emission.

Each instance gets a fresh segmenter (the healing test double carries state)
and a seed derived by hashing the run seed with the instance id, so results do
not depend on worker scheduling. Reports are written three ways: line-delimited
JSON records for machines, a CSV matrix, and an aligned text table; all three
are byte-deterministic for a fixed config and seed.
"""

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .datasets import Instance
from .exceptions import InputError
from .metrics import iou_at_k, noc
from .segmenters import Segmenter
from .session import SessionConfig, SessionTrace, run_simulated_session

log = logging.getLogger(__name__)

SegmenterFactory = Callable[[Instance, int], Segmenter]

DEFAULT_MIOU_KS = (1, 2, 3, 5)

MODE_LABELS = {
    "none": "Baseline (BL)",
    "post_process": "BL+post-processing",
    "pseudo_click": "BL+1 pseudo-click",
}


def instance_seed(run_seed: int, instance_id: str) -> int:
    """Stable 63-bit per-instance seed, independent of evaluation order."""
    digest = hashlib.sha256(f"{run_seed}:{instance_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class InstanceResult:
    id: str
    clicks: int
    final_iou: float
    noc: dict[str, int]
    reached: dict[str, bool]
    iou_at: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "type": "instance",
            "id": self.id,
            "clicks": self.clicks,
            "final_iou": self.final_iou,
            "noc": self.noc,
            "reached": self.reached,
            "iou_at": self.iou_at,
        }


@dataclass(frozen=True)
class EvalReport:
    config: dict
    seed: int
    miou_ks: tuple[int, ...]
    instances: tuple[InstanceResult, ...]
    mean_noc: dict[str, float]
    failures: dict[str, int]
    miou: dict[str, float]

    def to_records(self) -> list[dict]:
        header = {
            "type": "header",
            "config": self.config,
            "config_fingerprint": SessionConfig.from_dict(self.config).fingerprint(),
            "seed": self.seed,
            "miou_ks": list(self.miou_ks),
            "instance_count": len(self.instances),
        }
        summary = {
            "type": "summary",
            "mean_noc": self.mean_noc,
            "failures": self.failures,
            "miou": self.miou,
        }
        return [header, *[r.to_dict() for r in self.instances], summary]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
            for r in self.to_records()
        )

    def to_csv(self) -> str:
        targets = sorted(self.mean_noc)
        ks = [str(k) for k in self.miou_ks]
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["id", "clicks", "final_iou"]
            + [f"noc@{t}" for t in targets]
            + [f"reached@{t}" for t in targets]
            + [f"iou@{k}" for k in ks]
        )
        for r in self.instances:
            writer.writerow(
                [r.id, r.clicks, f"{r.final_iou:.6f}"]
                + [r.noc[t] for t in targets]
                + [int(r.reached[t]) for t in targets]
                + [f"{r.iou_at[k]:.6f}" for k in ks]
            )
        writer.writerow(
            ["MEAN", "", ""]
            + [f"{self.mean_noc[t]:.4f}" for t in targets]
            + [len(self.instances) - self.failures[t] for t in targets]
            + [f"{self.miou[k]:.6f}" for k in ks]
        )
        return out.getvalue()

    def to_text(self) -> str:
        targets = sorted(self.mean_noc)
        lines = [
            f"instances: {len(self.instances)}   seed: {self.seed}   "
            f"mode: {self.config['refinement_mode']}"
        ]
        for t in targets:
            lines.append(
                f"NoC@{float(t) * 100:.0f}: {self.mean_noc[t]:.4f}   "
                f"failures: {self.failures[t]}"
            )
        for k in self.miou_ks:
            lines.append(f"mIoU@{k}: {self.miou[str(k)] * 100:.1f}")
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> EvalReport:
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records or records[0].get("type") != "header" or records[-1].get("type") != "summary":
        raise InputError("report must start with a header and end with a summary record")
    header, summary = records[0], records[-1]
    instances = tuple(
        InstanceResult(
            id=r["id"],
            clicks=r["clicks"],
            final_iou=r["final_iou"],
            noc=r["noc"],
            reached=r["reached"],
            iou_at=r["iou_at"],
        )
        for r in records[1:-1]
    )
    return EvalReport(
        config=header["config"],
        seed=header["seed"],
        miou_ks=tuple(header["miou_ks"]),
        instances=instances,
        mean_noc=summary["mean_noc"],
        failures=summary["failures"],
        miou=summary["miou"],
    )


def score_trace(trace: SessionTrace, cfg: SessionConfig, miou_ks: Sequence[int]) -> InstanceResult:
    ious = trace.round_end_ious()
    noc_by_target: dict[str, int] = {}
    reached: dict[str, bool] = {}
    for t in cfg.target_ious:
        result = noc(trace, t, cfg.click_budget)
        key = f"{t:g}"
        noc_by_target[key] = result.clicks
        reached[key] = result.reached
    return InstanceResult(
        id=trace.instance_id,
        clicks=len(ious),
        final_iou=ious[-1] if ious else 0.0,
        noc=noc_by_target,
        reached=reached,
        iou_at={str(k): iou_at_k(trace, k) for k in miou_ks},
    )


def run_benchmark(
    dataset: Sequence[Instance],
    seg_factory: SegmenterFactory,
    cfg: SessionConfig,
    miou_ks: Sequence[int] = DEFAULT_MIOU_KS,
    jobs: int = 1,
    keep_traces: bool = False,
) -> tuple[EvalReport, list[SessionTrace]]:
    """Simulates every instance and aggregates NoC and mIoU.

    Per-instance failures are logged and excluded from aggregation rather than
    aborting the run. Returns (report, traces); traces is empty unless
    keep_traces is set.
    """
    if not dataset:
        raise InputError("dataset is empty")

    def evaluate(inst: Instance) -> tuple[str, SessionTrace | None, Exception | None]:
        seed = instance_seed(cfg.rng_seed, inst.id)
        seg = None
        try:
            seg = seg_factory(inst, seed)
            trace = run_simulated_session(inst.image, inst.gt, seg, cfg, instance_id=inst.id)
            return inst.id, trace, None
        except Exception as exc:  # recorded per instance, run continues
            return inst.id, None, exc
        finally:
            close = getattr(seg, "close", None)
            if close is not None:
                close()

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(evaluate, dataset))
    else:
        outcomes = [evaluate(inst) for inst in dataset]

    traces: list[SessionTrace] = []
    results: list[InstanceResult] = []
    for inst_id, trace, exc in sorted(outcomes, key=lambda o: o[0]):
        if exc is not None:
            log.error("instance %s failed: %s", inst_id, exc)
            continue
        results.append(score_trace(trace, cfg, miou_ks))
        if keep_traces:
            traces.append(trace)
    if not results:
        raise InputError("every instance failed")

    n = len(results)
    mean_noc = {
        f"{t:g}": sum(r.noc[f"{t:g}"] for r in results) / n for t in cfg.target_ious
    }
    failures = {
        f"{t:g}": sum(not r.reached[f"{t:g}"] for r in results) for t in cfg.target_ious
    }
    miou = {str(k): sum(r.iou_at[str(k)] for r in results) / n for k in miou_ks}
    report = EvalReport(
        config=cfg.to_dict(),
        seed=cfg.rng_seed,
        miou_ks=tuple(miou_ks),
        instances=tuple(results),
        mean_noc=mean_noc,
        failures=failures,
        miou=miou,
    )
    return report, traces


def run_mode_matrix(
    dataset: Sequence[Instance],
    seg_factory: SegmenterFactory,
    cfg: SessionConfig,
    modes: Sequence[str] = ("none", "post_process", "pseudo_click"),
    miou_ks: Sequence[int] = DEFAULT_MIOU_KS,
    jobs: int = 1,
) -> dict[str, EvalReport]:
    """One benchmark per refinement mode on identical instances and seeds."""
    reports = {}
    for mode in modes:
        report, _ = run_benchmark(
            dataset, seg_factory, replace(cfg, refinement_mode=mode), miou_ks, jobs
        )
        reports[mode] = report
    return reports


def format_miou_table(rows: Sequence[tuple[str, Sequence[float]]], ks: Sequence[int]) -> str:
    """Aligned comparison grid: one row per method, one column per mIoU@k.

    Values are percentages rendered with one decimal place.
    """
    headers = ["Method"] + [f"mIoU@{k}" for k in ks]
    cells = [[label, *[f"{v:.1f}" for v in values]] for label, values in rows]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in cells)) for i in range(len(headers))
    ]
    lines = [
        "| " + " | ".join(headers[i].ljust(widths[i]) for i in range(len(headers))) + " |",
        "|" + "|".join("-" * (w + 2) for w in widths) + "|",
    ]
    for row in cells:
        padded = [row[0].ljust(widths[0])] + [
            row[i].rjust(widths[i]) for i in range(1, len(headers))
        ]
        lines.append("| " + " | ".join(padded) + " |")
    return "\n".join(lines) + "\n"


def format_mode_matrix(reports: dict[str, EvalReport], ks: Sequence[int]) -> str:
    rows = []
    for mode, report in reports.items():
        rows.append(
            (MODE_LABELS.get(mode, mode), [report.miou[str(k)] * 100 for k in ks])
        )
    return format_miou_table(rows, ks)
