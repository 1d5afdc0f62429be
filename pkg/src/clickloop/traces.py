"""Trace file IO: line-delimited JSON, one record per line.

Layout (documented field-by-field in the README): a `header` record, one
`round` record per human click, and a closing `summary` record carrying the
final mask as run-length encoding. Serialization uses sorted keys and compact
separators so identical sessions produce byte-identical files.
"""

import json
from dataclasses import dataclass
from typing import IO

import numpy as np

from .clicks import Click
from .exceptions import InputError
from .masks import as_bool_mask
from .rle import decode_mask, encode_mask
from .session import SessionConfig, SessionTrace

TRACE_VERSION = 1


def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def trace_records(trace: SessionTrace) -> list[dict]:
    h, w = trace.final_mask.shape
    records: list[dict] = [
        {
            "type": "header",
            "version": TRACE_VERSION,
            "instance_id": trace.instance_id,
            "image_shape": [int(h), int(w)],
            "config": trace.config.to_dict(),
            "config_fingerprint": trace.config.fingerprint(),
        }
    ]
    for r in trace.rounds:
        records.append(
            {
                "type": "round",
                "round": r.round,
                "human_click": r.human_click.to_dict(),
                "pseudo_clicks": [c.to_dict() for c in r.pseudo_clicks],
                "iou_initial": r.iou_initial,
                "iou_refined": r.iou_refined,
            }
        )
    ious = [r.iou_refined for r in trace.rounds]
    records.append(
        {
            "type": "summary",
            "rounds": len(trace.rounds),
            "final_iou": ious[-1] if ious else None,
            "final_mask": encode_mask(trace.final_mask),
        }
    )
    return records


def write_trace(trace: SessionTrace, fp: IO[str]) -> None:
    for record in trace_records(trace):
        fp.write(_dumps(record) + "\n")


def dumps_trace(trace: SessionTrace) -> str:
    return "".join(_dumps(r) + "\n" for r in trace_records(trace))


@dataclass(frozen=True)
class ParsedTrace:
    """A trace file read back: enough for metrics, not a live session."""

    instance_id: str
    config: SessionConfig
    rounds: tuple[dict, ...]
    final_iou: float | None
    final_mask: np.ndarray

    def round_end_ious(self) -> list[float]:
        return [r["iou_refined"] for r in self.rounds]

    def human_clicks(self) -> list[Click]:
        return [Click.from_dict(r["human_click"]) for r in self.rounds]


def read_trace(fp: IO[str]) -> ParsedTrace:
    records = []
    for line_no, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise InputError(f"trace line {line_no} is not valid JSON: {exc}") from exc
    if not records:
        raise InputError("trace file is empty")
    header, *rest = records
    if header.get("type") != "header":
        raise InputError("trace file must start with a header record")
    if not rest or rest[-1].get("type") != "summary":
        raise InputError("trace file must end with a summary record")
    summary = rest[-1]
    rounds = tuple(rest[:-1])
    if any(r.get("type") != "round" for r in rounds):
        raise InputError("unexpected record type between header and summary")
    if summary["rounds"] != len(rounds):
        raise InputError(
            f"summary reports {summary['rounds']} rounds, file has {len(rounds)}"
        )
    return ParsedTrace(
        instance_id=header["instance_id"],
        config=SessionConfig.from_dict(header["config"]),
        rounds=rounds,
        final_iou=summary["final_iou"],
        final_mask=as_bool_mask(decode_mask(summary["final_mask"])),
    )
