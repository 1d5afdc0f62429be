"""Minimal out-of-process segmenter demonstrating the subprocess frame protocol.

Paints positive click disks onto the previous mask and erases negative ones;
emits zero error estimates. Run with: python -m clickloop.reference_worker
"""

import sys

import numpy as np

from .subprocess_protocol import decode_request, encode_response, read_frame, write_frame


def predict_tensor(tensor: np.ndarray, image_channels: int) -> np.ndarray:
    prev_mask = tensor[image_channels]
    clicks = tensor[image_channels + 1 :]
    positive = (clicks[0] > 0) | (clicks[2] > 0)
    negative = (clicks[1] > 0) | (clicks[3] > 0)
    prob = prev_mask.copy()
    prob[positive] = 1.0
    prob[negative] = 0.0
    return prob


def main() -> None:
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        try:
            payload = read_frame(stdin)
        except EOFError:
            return
        tensor, image_channels = decode_request(payload)
        prob = predict_tensor(tensor, image_channels)
        zeros = np.zeros_like(prob)
        write_frame(stdout, encode_response(prob, zeros, zeros))


if __name__ == "__main__":
    main()
