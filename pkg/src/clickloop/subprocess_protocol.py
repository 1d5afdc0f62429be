"""Out-of-process segmenter plug-in protocol over stdin/stdout binary frames.

Frame layout (all integers little-endian):

  frame    := u32 payload_length, payload
  request  := u32 height, u32 width, u32 image_channels,
              float32[(image_channels + 5) * height * width]
  response := float32[3 * height * width]

The request tensor is channel-first, row-major within each channel, channels
ordered [image..., prev_mask, human+, human-, pseudo+, pseudo-] (the click
channels in merge_encodings order). The response carries the probability map
followed by the FP and FN estimates, same layout. A worker reads request
frames until EOF and must answer each with exactly one response frame.
"""

import struct
import subprocess
from typing import BinaryIO

import numpy as np

from .encoding import SegmentationInput, merge_encodings
from .error_maps import ErrorMapPair
from .exceptions import InputError
from .segmenters import SegmenterOutput

_HEADER = struct.Struct("<III")
_LEN = struct.Struct("<I")


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise EOFError(f"stream closed with {remaining} of {n} bytes unread")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def write_frame(stream: BinaryIO, payload: bytes) -> None:
    stream.write(_LEN.pack(len(payload)))
    stream.write(payload)
    stream.flush()


def read_frame(stream: BinaryIO) -> bytes:
    (length,) = _LEN.unpack(_read_exact(stream, _LEN.size))
    return _read_exact(stream, length)


def encode_request(inp: SegmentationInput) -> bytes:
    image = np.asarray(inp.image, dtype=np.float32)
    h, w, c = image.shape
    planes = [image[:, :, i] for i in range(c)]
    planes.append(np.asarray(inp.prev_mask, dtype=np.float32))
    planes.extend(merge_encodings(inp.human, inp.pseudo))
    tensor = np.ascontiguousarray(np.stack(planes), dtype="<f4")
    return _HEADER.pack(h, w, c) + tensor.tobytes()


def decode_request(payload: bytes) -> tuple[np.ndarray, int]:
    """Tensor of shape (image_channels + 5, H, W) and the image channel count."""
    h, w, c = _HEADER.unpack_from(payload)
    total = (c + 5) * h * w
    body = np.frombuffer(payload, dtype="<f4", offset=_HEADER.size)
    if body.size != total:
        raise InputError(f"request payload carries {body.size} floats, expected {total}")
    return body.reshape(c + 5, h, w).copy(), c


def encode_response(prob: np.ndarray, fp: np.ndarray, fn: np.ndarray) -> bytes:
    tensor = np.ascontiguousarray(np.stack([prob, fp, fn]), dtype="<f4")
    return tensor.tobytes()


def decode_response(payload: bytes, shape: tuple[int, int]) -> SegmenterOutput:
    h, w = shape
    body = np.frombuffer(payload, dtype="<f4")
    if body.size != 3 * h * w:
        raise InputError(f"response payload carries {body.size} floats, expected {3 * h * w}")
    maps = body.reshape(3, h, w).astype(np.float64)
    return SegmenterOutput(prob=maps[0], errors=ErrorMapPair(fp=maps[1], fn=maps[2]))


class SubprocessSegmenter:
    """Runs a worker command and forwards predict calls over the frame protocol."""

    def __init__(self, command: list[str]):
        self.command = command
        self._proc: subprocess.Popen | None = None

    def _process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        return self._proc

    def predict(self, inp: SegmentationInput) -> SegmenterOutput:
        proc = self._process()
        try:
            write_frame(proc.stdin, encode_request(inp))
            payload = read_frame(proc.stdout)
        except (BrokenPipeError, EOFError) as exc:
            raise InputError(f"segmenter worker {self.command} died: {exc}") from exc
        return decode_response(payload, inp.shape)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
