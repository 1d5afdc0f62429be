import base64
import io
import json
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from clickloop.masks import connected_components, distance_transform, region_center
from clickloop.rle import decode_mask
from clickloop.segmenters import OracleNoiseConfig, SegmenterOutput
from clickloop.service import create_app
from clickloop.traces import read_trace

SIZE = 48


def png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def square_case(size=SIZE, lo=16, hi=32):
    gt = np.zeros((size, size), dtype=bool)
    gt[lo:hi, lo:hi] = True
    image = np.full((size, size, 3), 40, dtype=np.uint8)
    image[gt] = 200
    return image, gt


def gt_center(gt: np.ndarray) -> tuple[int, int]:
    region = connected_components(gt)[0]
    return region_center(region, distance_transform(gt))


def upload_files(image, gt=None):
    files = {"image": ("image.png", png_bytes(image), "image/png")}
    if gt is not None:
        files["gt"] = ("gt.png", png_bytes(gt.astype(np.uint8) * 255), "image/png")
    return files


@pytest.fixture()
def oracle_client():
    app = create_app(
        segmenter_kind="oracle",
        oracle_config=OracleNoiseConfig(flip_blob_count=0, rng_seed=0),
    )
    with TestClient(app) as client:
        yield client


def create_session(client, image=None, gt=None, config=None, **extra):
    if image is None:
        image, gt_default = square_case()
        gt = gt_default if gt is None else gt
    data = dict(extra)
    if config is not None:
        data["config"] = json.dumps(config)
    resp = client.post("/sessions", files=upload_files(image, gt), data=data)
    return resp


class TestCreateSession:
    def test_created_with_metadata(self, oracle_client):
        resp = create_session(oracle_client)
        assert resp.status_code == 201
        body = resp.json()
        assert body["image_shape"] == [SIZE, SIZE]
        assert body["segmenter"] == "oracle"
        assert body["has_gt"] is True
        assert body["config"]["refinement_mode"] == "pseudo_click"

    def test_config_override_merges(self, oracle_client):
        resp = create_session(oracle_client, config={"click_budget": 5, "refinement_mode": "none"})
        body = resp.json()
        assert body["config"]["click_budget"] == 5
        assert body["config"]["refinement_mode"] == "none"
        assert body["config"]["tau"] == 0.5

    @pytest.mark.parametrize(
        "config",
        ["not json", json.dumps([1, 2]), json.dumps({"mystery": 1}), json.dumps({"tau": 2.0})],
    )
    def test_bad_config_rejected(self, oracle_client, config):
        image, gt = square_case()
        resp = oracle_client.post(
            "/sessions", files=upload_files(image, gt), data={"config": config}
        )
        assert resp.status_code == 400

    def test_undecodable_image_rejected(self, oracle_client):
        resp = oracle_client.post(
            "/sessions", files={"image": ("x.png", b"not a png", "image/png")}
        )
        assert resp.status_code == 400

    def test_gt_shape_mismatch_rejected(self, oracle_client):
        image, _ = square_case()
        wrong = np.zeros((SIZE + 1, SIZE), dtype=bool)
        resp = create_session(oracle_client, image=image, gt=wrong)
        assert resp.status_code == 400

    def test_oracle_without_gt_rejected(self, oracle_client):
        image, _ = square_case()
        resp = oracle_client.post("/sessions", files=upload_files(image))
        assert resp.status_code == 400

    def test_unknown_segmenter_rejected(self, oracle_client):
        resp = create_session(oracle_client, segmenter="magic")
        assert resp.status_code == 400

    def test_oversize_image_rejected(self):
        app = create_app(segmenter_kind="region-grow", max_image_px=100)
        with TestClient(app) as client:
            image = np.zeros((20, 20, 3), dtype=np.uint8)
            resp = client.post("/sessions", files=upload_files(image))
            assert resp.status_code == 413


class TestClickFlow:
    def test_perfect_oracle_click(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        row, col = gt_center(gt)
        resp = oracle_client.post(
            f"/sessions/{session['id']}/clicks",
            json={"row": row, "col": col, "polarity": "positive"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["type"] == "round"
        assert body["round"] == 0
        assert body["clicks_total"] == 1
        assert body["iou"] == 1.0
        assert np.array_equal(decode_mask(body["mask"]), gt)
        assert body["human_click"]["polarity"] == "positive"

    def test_pseudo_click_reported(self):
        app = create_app(
            segmenter_kind="oracle",
            oracle_config=OracleNoiseConfig(flip_blob_count=2, rng_seed=3),
        )
        image, gt = square_case()
        with TestClient(app) as client:
            session = create_session(client, image=image, gt=gt).json()
            row, col = gt_center(gt)
            body = client.post(
                f"/sessions/{session['id']}/clicks",
                json={"row": row, "col": col, "polarity": "positive"},
            ).json()
        assert len(body["pseudo_clicks"]) == 1
        assert body["pseudo_clicks"][0]["source"] == "pseudo"
        assert body["iou"] == 1.0
        assert body["iou_initial"] < 1.0

    def test_include_prob_returns_png(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        row, col = gt_center(gt)
        body = oracle_client.post(
            f"/sessions/{session['id']}/clicks",
            json={"row": row, "col": col, "polarity": "positive", "include_prob": True},
        ).json()
        decoded = np.asarray(Image.open(io.BytesIO(base64.b64decode(body["prob_png"]))))
        assert decoded.shape == (SIZE, SIZE)
        assert np.array_equal(decoded >= 128, gt)

    def test_out_of_bounds_click(self, oracle_client):
        session = create_session(oracle_client).json()
        resp = oracle_client.post(
            f"/sessions/{session['id']}/clicks",
            json={"row": SIZE + 5, "col": 0, "polarity": "positive"},
        )
        assert resp.status_code == 422

    def test_invalid_polarity_rejected(self, oracle_client):
        session = create_session(oracle_client).json()
        resp = oracle_client.post(
            f"/sessions/{session['id']}/clicks",
            json={"row": 0, "col": 0, "polarity": "sideways"},
        )
        assert resp.status_code == 422

    def test_unknown_session_404(self, oracle_client):
        for method, url in [
            ("post", "/sessions/nope/clicks"),
            ("post", "/sessions/nope/undo"),
            ("get", "/sessions/nope"),
            ("get", "/sessions/nope/mask.png"),
        ]:
            kwargs = (
                {"json": {"row": 0, "col": 0, "polarity": "positive"}}
                if url.endswith("clicks")
                else {}
            )
            assert getattr(oracle_client, method)(url, **kwargs).status_code == 404


class TestSnapshotAndMask:
    def test_snapshot_tracks_history(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        sid = session["id"]
        row, col = gt_center(gt)
        oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": row, "col": col, "polarity": "positive"}
        )
        oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": 0, "col": 0, "polarity": "negative"}
        )
        snap = oracle_client.get(f"/sessions/{sid}").json()
        assert snap["round"] == 2
        assert snap["clicks_total"] == 2
        assert [c["polarity"] for c in snap["human_clicks"]] == ["positive", "negative"]
        assert all(c["source"] == "human" for c in snap["human_clicks"])
        assert len(snap["iou_history"]) == 2
        assert snap["has_gt"] is True
        assert snap["iou"] == snap["iou_history"][-1]

    def test_mask_png_round_trip(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        row, col = gt_center(gt)
        oracle_client.post(
            f"/sessions/{session['id']}/clicks",
            json={"row": row, "col": col, "polarity": "positive"},
        )
        resp = oracle_client.get(f"/sessions/{session['id']}/mask.png")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        decoded = np.asarray(Image.open(io.BytesIO(resp.content)))
        assert np.array_equal(decoded > 0, gt)


class TestUndo:
    def test_undo_rewinds_one_round(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        sid = session["id"]
        row, col = gt_center(gt)
        first = oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": row, "col": col, "polarity": "positive"}
        ).json()
        oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": 1, "col": 1, "polarity": "negative"}
        )
        undone = oracle_client.post(f"/sessions/{sid}/undo").json()
        assert undone["type"] == "undo"
        assert undone["clicks_total"] == 1
        assert undone["round"] == 1
        assert undone["mask"] == first["mask"]
        assert undone["iou"] == first["iou"]

    def test_undo_to_empty_then_409(self, oracle_client):
        image, gt = square_case()
        session = create_session(oracle_client, image=image, gt=gt).json()
        sid = session["id"]
        oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": 20, "col": 20, "polarity": "positive"}
        )
        undone = oracle_client.post(f"/sessions/{sid}/undo").json()
        assert undone["clicks_total"] == 0
        assert decode_mask(undone["mask"]).sum() == 0
        assert oracle_client.post(f"/sessions/{sid}/undo").status_code == 409


class SlowSegmenter:
    instances: list = []

    def __init__(self, config=None):
        self.entered = threading.Event()
        self.release = threading.Event()
        SlowSegmenter.instances.append(self)

    def predict(self, inp) -> SegmenterOutput:
        self.entered.set()
        self.release.wait(timeout=10)
        h, w = inp.image.shape[:2]
        zeros = np.zeros((h, w), dtype=np.float32)
        from clickloop.error_maps import ErrorMapPair

        return SegmenterOutput(prob=zeros, errors=ErrorMapPair(fp=zeros, fn=zeros))


def test_concurrent_click_gets_409(monkeypatch):
    monkeypatch.setattr("clickloop.service.RegionGrowSegmenter", SlowSegmenter)
    SlowSegmenter.instances.clear()
    app = create_app(segmenter_kind="region-grow")
    with TestClient(app) as client:
        image, _ = square_case()
        resp = client.post("/sessions", files=upload_files(image))
        sid = resp.json()["id"]
        seg = SlowSegmenter.instances[-1]
        results = {}

        def slow_click():
            results["first"] = client.post(
                f"/sessions/{sid}/clicks",
                json={"row": 1, "col": 1, "polarity": "positive"},
            )

        worker = threading.Thread(target=slow_click)
        worker.start()
        assert seg.entered.wait(timeout=5)
        busy = client.post(
            f"/sessions/{sid}/clicks", json={"row": 2, "col": 2, "polarity": "positive"}
        )
        assert busy.status_code == 409
        seg.release.set()
        worker.join(timeout=10)
        assert results["first"].status_code == 200


def test_websocket_receives_round_events(oracle_client):
    image, gt = square_case()
    session = create_session(oracle_client, image=image, gt=gt).json()
    sid = session["id"]
    row, col = gt_center(gt)
    with oracle_client.websocket_connect(f"/sessions/{sid}/events") as ws:
        oracle_client.post(
            f"/sessions/{sid}/clicks", json={"row": row, "col": col, "polarity": "positive"}
        )
        event = json.loads(ws.receive_text())
    assert event["type"] == "round"
    assert event["clicks_total"] == 1
    assert np.array_equal(decode_mask(event["mask"]), gt)


def test_websocket_unknown_session_closes(oracle_client):
    from starlette.websockets import WebSocketDisconnect

    with pytest.raises(WebSocketDisconnect):
        with oracle_client.websocket_connect("/sessions/nope/events") as ws:
            ws.receive_text()


def test_trace_persisted_and_parseable(tmp_path):
    app = create_app(
        segmenter_kind="oracle",
        oracle_config=OracleNoiseConfig(flip_blob_count=0, rng_seed=0),
        trace_dir=tmp_path,
    )
    image, gt = square_case()
    with TestClient(app) as client:
        session = create_session(client, image=image, gt=gt).json()
        sid = session["id"]
        row, col = gt_center(gt)
        client.post(
            f"/sessions/{sid}/clicks", json={"row": row, "col": col, "polarity": "positive"}
        )
        with open(tmp_path / f"{sid}.jsonl") as f:
            trace = read_trace(f)
        assert trace.instance_id == sid
        assert len(trace.rounds) == 1
        assert trace.round_end_ious() == [1.0]
        client.post(f"/sessions/{sid}/undo")
        with open(tmp_path / f"{sid}.jsonl") as f:
            rewound = read_trace(f)
        assert len(rewound.rounds) == 0


def test_idle_sessions_evicted():
    app = create_app(
        segmenter_kind="oracle",
        oracle_config=OracleNoiseConfig(flip_blob_count=0, rng_seed=0),
        idle_timeout_s=0.05,
    )
    with TestClient(app) as client:
        session = create_session(client).json()
        sid = session["id"]
        assert client.get(f"/sessions/{sid}").status_code == 200
        time.sleep(0.12)
        assert client.get(f"/sessions/{sid}").status_code == 404


def test_healthz(oracle_client):
    resp = oracle_client.get("/healthz")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert isinstance(body["sessions"], int)
