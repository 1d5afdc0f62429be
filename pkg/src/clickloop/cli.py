"""Command-line interface: benchmark runs, trace inspection, and the server.

Log level comes from the CLICKLOOP_LOG environment variable (debug, info,
warning, error); default warning.
"""

import argparse
import logging
import os
import shlex
import sys
from dataclasses import replace
from pathlib import Path

from .benchmark import (
    DEFAULT_MIOU_KS,
    format_mode_matrix,
    run_benchmark,
    run_mode_matrix,
    SegmenterFactory,
)
from .datasets import Instance, load_dataset, parse_synth_spec, synth_dataset
from .exceptions import ClickloopError
from .metrics import noc
from .segmenters import (
    OracleNoiseConfig,
    OracleSegmenter,
    RegionGrowConfig,
    RegionGrowSegmenter,
)
from .session import SessionConfig
from .subprocess_protocol import SubprocessSegmenter
from .traces import read_trace, write_trace

log = logging.getLogger(__name__)

MODE_BY_FLAG = {"none": "none", "post": "post_process", "pseudo": "pseudo_click"}


def _configure_logging() -> None:
    level_name = os.environ.get("CLICKLOOP_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parse_targets(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_ks(text: str) -> tuple[int, ...]:
    return tuple(int(k) for k in text.split(",") if k.strip())


def _segmenter_factory(args: argparse.Namespace) -> SegmenterFactory:
    spec = args.segmenter
    if spec == "oracle":
        oracle_cfg = OracleNoiseConfig(
            flip_blob_count=args.oracle_blobs,
            blob_radius=args.oracle_blob_radius,
            error_estimate_fidelity=args.oracle_fidelity,
        )

        def factory(inst: Instance, seed: int):
            return OracleSegmenter(inst.gt, replace(oracle_cfg, rng_seed=seed))

        return factory
    if spec == "region-grow":
        rg_cfg = RegionGrowConfig(
            intensity_weight=args.intensity_weight, uncertainty_band=args.uncertainty_band
        )
        return lambda inst, seed: RegionGrowSegmenter(rg_cfg)
    if spec.startswith("subprocess:"):
        argv = shlex.split(spec[len("subprocess:") :])
        if not argv:
            raise ClickloopError("subprocess segmenter needs a command")
        return lambda inst, seed: SubprocessSegmenter(argv)
    raise ClickloopError(
        f"unknown segmenter {spec!r}; use oracle, region-grow, or subprocess:<cmd>"
    )


def _load_instances(args: argparse.Namespace) -> list[Instance]:
    if args.dataset is not None:
        instances = load_dataset(args.dataset)
        if not instances:
            raise ClickloopError(f"no usable instances under {args.dataset}")
        return instances
    return synth_dataset(parse_synth_spec(args.synth, default_seed=args.seed))


def _write_report(out_dir: Path, name: str, report) -> None:
    (out_dir / f"{name}.jsonl").write_text(report.to_jsonl())
    (out_dir / f"{name}.csv").write_text(report.to_csv())
    (out_dir / f"{name}.txt").write_text(report.to_text())


def cmd_bench(args: argparse.Namespace) -> int:
    instances = _load_instances(args)
    factory = _segmenter_factory(args)
    cfg = SessionConfig(
        refinement_mode="pseudo_click",
        click_budget=args.budget,
        target_ious=_parse_targets(args.targets),
        rng_seed=args.seed,
    )
    ks = _parse_ks(args.miou_ks)
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    if args.mode == "all":
        reports = run_mode_matrix(instances, factory, cfg, miou_ks=ks, jobs=args.jobs)
        table = format_mode_matrix(reports, ks)
        if out_dir is not None:
            for mode, report in reports.items():
                _write_report(out_dir, f"report-{mode}", report)
            (out_dir / "table.txt").write_text(table)
        sys.stdout.write(table)
        return 0

    cfg = replace(cfg, refinement_mode=MODE_BY_FLAG[args.mode])
    report, traces = run_benchmark(
        instances, factory, cfg, miou_ks=ks, jobs=args.jobs, keep_traces=args.save_traces
    )
    if out_dir is not None:
        _write_report(out_dir, f"report-{cfg.refinement_mode}", report)
        if args.save_traces:
            traces_dir = out_dir / "traces"
            traces_dir.mkdir(exist_ok=True)
            for trace in traces:
                with open(traces_dir / f"{trace.instance_id}.jsonl", "w") as fp:
                    write_trace(trace, fp)
    sys.stdout.write(report.to_text())
    return 0


def cmd_eval_trace(args: argparse.Namespace) -> int:
    with open(args.trace) as fp:
        trace = read_trace(fp)
    cfg = trace.config
    ious = trace.round_end_ious()
    lines = [
        f"instance: {trace.instance_id}",
        f"rounds: {len(trace.rounds)}",
        f"final IoU: {trace.final_iou:.4f}" if trace.final_iou is not None else "final IoU: n/a",
    ]
    if all(v is not None for v in ious):
        for target in cfg.target_ious:
            result = noc(ious, target, cfg.click_budget)
            suffix = "reached" if result.reached else "not reached, capped"
            lines.append(f"NoC@{target * 100:.0f}: {result.clicks} ({suffix})")
    else:
        lines.append("NoC: n/a (no ground truth in trace)")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    subprocess_cmd = None
    kind = args.segmenter
    if kind.startswith("subprocess:"):
        subprocess_cmd = shlex.split(kind[len("subprocess:") :])
        kind = "region-grow"
    app = create_app(
        segmenter_kind=kind,
        max_image_px=args.max_image_px,
        idle_timeout_s=args.idle_timeout,
        trace_dir=args.trace_dir,
        subprocess_cmd=subprocess_cmd,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clickloop")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a simulated-click benchmark")
    source = bench.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", help="dataset directory (images/ + masks/)")
    source.add_argument("--synth", help="synthetic spec, e.g. count=50,size=64")
    bench.add_argument("--segmenter", default="oracle")
    bench.add_argument("--mode", choices=[*MODE_BY_FLAG, "all"], default="pseudo")
    bench.add_argument("--budget", type=int, default=20)
    bench.add_argument("--targets", default="0.85,0.90")
    bench.add_argument("--miou-ks", default=",".join(map(str, DEFAULT_MIOU_KS)))
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", help="directory for report files")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--save-traces", action="store_true")
    bench.add_argument("--oracle-blobs", type=int, default=3)
    bench.add_argument("--oracle-blob-radius", type=int, default=4)
    bench.add_argument("--oracle-fidelity", type=float, default=1.0)
    bench.add_argument("--intensity-weight", type=float, default=1.0)
    bench.add_argument("--uncertainty-band", type=int, default=3)
    bench.set_defaults(func=cmd_bench)

    ev = sub.add_parser("eval-trace", help="summarize a trace file")
    ev.add_argument("trace")
    ev.set_defaults(func=cmd_eval_trace)

    serve = sub.add_parser("serve", help="run the annotation server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--segmenter", default="region-grow")
    serve.add_argument("--max-image-px", type=int, default=4_000_000)
    serve.add_argument("--idle-timeout", type=float, default=3600.0)
    serve.add_argument("--trace-dir")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClickloopError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
