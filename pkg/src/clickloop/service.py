"""Session-oriented HTTP + WebSocket API over the interaction loop.

One server hosts many concurrent annotation sessions, each serialized by its
own lock: a click arriving while the previous one is still processing gets 409
instead of queueing. Undo replays the remaining clicks from a fresh state,
which segmenter determinism makes equivalent to never having clicked. Sessions
persist their traces in the evaluation trace format so human sessions feed the
same metrics pipeline.
"""

import asyncio
import base64
import io
import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Response, UploadFile, WebSocket
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from .clicks import Click, HUMAN
from .exceptions import ClickloopError, ConfigError, InputError, OutOfBoundsError
from .masks import iou, threshold
from .rle import encode_mask
from .segmenters import (
    OracleNoiseConfig,
    OracleSegmenter,
    RegionGrowConfig,
    RegionGrowSegmenter,
    Segmenter,
)
from .subprocess_protocol import SubprocessSegmenter
from .session import (
    RoundResult,
    SessionConfig,
    SessionState,
    apply_human_click,
    new_session,
    replay_human_clicks,
)
from .traces import SessionTrace, dumps_trace

log = logging.getLogger(__name__)

SEGMENTER_KINDS = ("region-grow", "oracle")
DEFAULT_MAX_IMAGE_PX = 4_000_000
DEFAULT_IDLE_TIMEOUT_S = 3600.0


class ClickRequest(BaseModel):
    row: int
    col: int
    polarity: Literal["positive", "negative"]
    include_prob: bool = False


@dataclass
class SessionHandle:
    id: str
    created_at: float
    config: SessionConfig
    state: SessionState
    seg: Segmenter
    segmenter_kind: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    results: list[RoundResult] = field(default_factory=list)
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    last_used: float = field(default_factory=time.monotonic)


def _decode_upload(data: bytes, name: str, mode: str) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert(mode))
    except (UnidentifiedImageError, OSError) as exc:
        raise HTTPException(400, f"could not decode {name}: {exc}") from exc


def _prob_png_base64(prob: np.ndarray) -> str:
    quantized = np.clip(np.round(prob * 255), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _mask_png(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.astype(np.uint8) * 255, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def create_app(
    segmenter_kind: str = "region-grow",
    default_config: SessionConfig | None = None,
    max_image_px: int = DEFAULT_MAX_IMAGE_PX,
    idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
    trace_dir: str | Path | None = None,
    subprocess_cmd: list[str] | None = None,
    region_grow_config: RegionGrowConfig | None = None,
    oracle_config: OracleNoiseConfig | None = None,
) -> FastAPI:
    if segmenter_kind not in SEGMENTER_KINDS and subprocess_cmd is None:
        raise ConfigError(f"segmenter_kind must be one of {SEGMENTER_KINDS}")
    base_config = default_config or SessionConfig()
    trace_path = Path(trace_dir) if trace_dir is not None else None
    if trace_path is not None:
        trace_path.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="clickloop")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, SessionHandle] = {}
    store_lock = threading.Lock()

    def _close_seg(handle: SessionHandle) -> None:
        close = getattr(handle.seg, "close", None)
        if close is not None:
            close()

    def _evict_idle() -> None:
        now = time.monotonic()
        with store_lock:
            stale = [h for h in sessions.values() if now - h.last_used > idle_timeout_s]
            for h in stale:
                del sessions[h.id]
        for h in stale:
            _close_seg(h)
            log.info("evicted idle session %s", h.id)

    def _get(session_id: str) -> SessionHandle:
        _evict_idle()
        handle = sessions.get(session_id)
        if handle is None:
            raise HTTPException(404, f"no session {session_id}")
        handle.last_used = time.monotonic()
        return handle

    def _make_segmenter(kind: str, gt: np.ndarray | None) -> Segmenter:
        if subprocess_cmd is not None:
            return SubprocessSegmenter(subprocess_cmd)
        if kind == "oracle":
            if gt is None:
                raise HTTPException(400, "oracle segmenter requires a gt upload")
            return OracleSegmenter(gt, oracle_config or OracleNoiseConfig())
        return RegionGrowSegmenter(region_grow_config or RegionGrowConfig())

    def _persist(handle: SessionHandle) -> None:
        if trace_path is None:
            return
        trace = SessionTrace(
            instance_id=handle.id,
            rounds=tuple(handle.results),
            final_mask=threshold(handle.state.prev_mask, handle.config.tau),
            config=handle.config,
        )
        (trace_path / f"{handle.id}.jsonl").write_text(dumps_trace(trace))

    def _current_mask(handle: SessionHandle) -> np.ndarray:
        return threshold(handle.state.prev_mask, handle.config.tau)

    def _current_iou(handle: SessionHandle) -> float | None:
        if handle.state.gt is None:
            return None
        return iou(_current_mask(handle), handle.state.gt)

    async def _broadcast(handle: SessionHandle, payload: dict) -> None:
        for queue in list(handle.subscribers):
            try:
                queue.put_nowait(payload)
            except asyncio.QueueFull:
                pass

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions", status_code=201)
    async def create_session(
        image: UploadFile = File(...),
        gt: UploadFile | None = File(None),
        config: str | None = Form(None),
        segmenter: str | None = Form(None),
    ) -> dict:
        _evict_idle()
        image_bytes = await image.read()
        image_arr = _decode_upload(image_bytes, "image", "RGB")
        h, w = image_arr.shape[:2]
        if h * w > max_image_px:
            raise HTTPException(413, f"image has {h * w} px, limit is {max_image_px}")
        gt_arr = None
        if gt is not None:
            gt_bytes = await gt.read()
            gt_arr = _decode_upload(gt_bytes, "gt", "L") >= 128
            if gt_arr.shape != (h, w):
                raise HTTPException(400, f"gt shape {gt_arr.shape} does not match image {(h, w)}")
        kind = segmenter or segmenter_kind
        if kind not in SEGMENTER_KINDS and subprocess_cmd is None:
            raise HTTPException(400, f"unknown segmenter {kind!r}")
        try:
            cfg = base_config
            if config is not None:
                overrides = json.loads(config)
                if not isinstance(overrides, dict):
                    raise HTTPException(400, "config must be a JSON object")
                cfg = SessionConfig.from_dict({**base_config.to_dict(), **overrides})
            state = new_session(image_arr, gt_arr, cfg)
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"config is not valid JSON: {exc}") from exc
        except ClickloopError as exc:
            raise HTTPException(400, str(exc)) from exc
        handle = SessionHandle(
            id=uuid.uuid4().hex,
            created_at=time.time(),
            config=cfg,
            state=state,
            seg=_make_segmenter(kind, gt_arr),
            segmenter_kind=kind if subprocess_cmd is None else "subprocess",
        )
        with store_lock:
            sessions[handle.id] = handle
        return {
            "id": handle.id,
            "config": cfg.to_dict(),
            "image_shape": [h, w],
            "segmenter": handle.segmenter_kind,
            "has_gt": gt_arr is not None,
        }

    def _round_payload(handle: SessionHandle, result: RoundResult, include_prob: bool) -> dict:
        payload = {
            "type": "round",
            "round": result.round,
            "clicks_total": len(handle.state.human_clicks),
            "mask": encode_mask(result.mask_after),
            "pseudo_clicks": [c.to_dict() for c in result.pseudo_clicks],
            "human_click": result.human_click.to_dict(),
            "iou_initial": result.iou_initial,
            "iou": result.iou_refined,
        }
        if include_prob:
            payload["prob_png"] = _prob_png_base64(result.output.prob)
        return payload

    @app.post("/sessions/{session_id}/clicks")
    async def post_click(session_id: str, click: ClickRequest) -> dict:
        handle = _get(session_id)
        if not handle.lock.acquire(blocking=False):
            raise HTTPException(409, "a click for this session is still processing")
        try:
            c = Click(row=click.row, col=click.col, polarity=click.polarity, source=HUMAN)
            try:
                result = await run_in_threadpool(
                    apply_human_click, handle.state, c, handle.seg, handle.config
                )
            except OutOfBoundsError as exc:
                raise HTTPException(422, str(exc)) from exc
            except InputError as exc:
                raise HTTPException(422, str(exc)) from exc
            handle.results.append(result)
            await run_in_threadpool(_persist, handle)
        finally:
            handle.lock.release()
        payload = _round_payload(handle, result, click.include_prob)
        await _broadcast(handle, payload)
        return payload

    @app.post("/sessions/{session_id}/undo")
    async def undo(session_id: str) -> dict:
        handle = _get(session_id)
        if not handle.lock.acquire(blocking=False):
            raise HTTPException(409, "a click for this session is still processing")
        try:
            if not handle.state.human_clicks:
                raise HTTPException(409, "no clicks to undo")
            remaining = handle.state.human_clicks[:-1]

            def _replay() -> tuple[SessionState, list[RoundResult]]:
                return replay_human_clicks(
                    handle.state.image, handle.state.gt, remaining, handle.seg, handle.config
                )

            handle.state, handle.results = await run_in_threadpool(_replay)
            await run_in_threadpool(_persist, handle)
        finally:
            handle.lock.release()
        payload = {
            "type": "undo",
            "round": handle.state.round,
            "clicks_total": len(handle.state.human_clicks),
            "mask": encode_mask(_current_mask(handle)),
            "iou": _current_iou(handle),
        }
        await _broadcast(handle, payload)
        return payload

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str) -> dict:
        handle = _get(session_id)
        h, w = handle.state.image.shape[:2]
        return {
            "id": handle.id,
            "created_at": handle.created_at,
            "config": handle.config.to_dict(),
            "segmenter": handle.segmenter_kind,
            "image_shape": [h, w],
            "round": handle.state.round,
            "clicks_total": len(handle.state.human_clicks),
            "human_clicks": [c.to_dict() for c in handle.state.human_clicks],
            "pseudo_clicks": [c.to_dict() for c in handle.state.pseudo_clicks],
            "mask": encode_mask(_current_mask(handle)),
            "iou_history": [r.iou_refined for r in handle.results],
            "iou": _current_iou(handle),
            "has_gt": handle.state.gt is not None,
        }

    @app.get("/sessions/{session_id}/mask.png")
    def get_mask_png(session_id: str) -> Response:
        handle = _get(session_id)
        return Response(content=_mask_png(_current_mask(handle)), media_type="image/png")

    @app.websocket("/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str) -> None:
        handle = sessions.get(session_id)
        if handle is None:
            await websocket.close(code=4004)
            return
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=64)
        handle.subscribers.append(queue)
        try:
            while True:
                payload = await queue.get()
                await websocket.send_text(json.dumps(payload, sort_keys=True))
        except Exception:
            pass
        finally:
            if queue in handle.subscribers:
                handle.subscribers.remove(queue)

    return app
