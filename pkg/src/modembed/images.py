"""Binary portable pixmap/graymap writers and minimal readers.

PGM P5 and PPM P6, maxval 255.  The readers only need to handle files this
package writes (single-whitespace headers, no comments).
"""

from __future__ import annotations

import numpy as np


def write_pgm(path, gray: np.ndarray) -> None:
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("PGM data must be a 2-D array")
    data = np.clip(np.round(gray), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM data must be an (H, W, 3) array")
    data = np.clip(np.round(rgb), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def _read_header(fh, magic):
    tokens = []
    while len(tokens) < 4:
        tok = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        while ch and not ch.isspace():
            tok += ch
            ch = fh.read(1)
        tokens.append(tok)
    if tokens[0] != magic:
        raise ValueError(f"expected {magic!r}, found {tokens[0]!r}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    return width, height


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        width, height = _read_header(fh, b"P5")
        data = np.frombuffer(fh.read(width * height), dtype=np.uint8)
    return data.reshape(height, width)


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        width, height = _read_header(fh, b"P6")
        data = np.frombuffer(fh.read(width * height * 3), dtype=np.uint8)
    return data.reshape(height, width, 3)
