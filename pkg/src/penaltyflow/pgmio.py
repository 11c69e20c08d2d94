"""Binary PGM (P5, maxval 255) reading/writing and atomic file emission."""

import os
import tempfile

import numpy as np

from .errors import FormatError, ParameterError


def atomic_write_bytes(path, data):
    """Write bytes to ``path`` via a temp file and rename; no partial files."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_pgm(path, img):
    """Write a [0, 1] image as binary PGM (P5, maxval 255, row-major)."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ParameterError("image must be 2-D")
    if img.min() < -1e-9 or img.max() > 1.0 + 1e-9:
        raise ParameterError("pixels must lie in [0, 1]")
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = data.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + data.tobytes())


def read_pgm(path):
    """Read a binary PGM written by :func:`write_pgm`; returns a [0, 1] image."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] == b"P2":
        raise FormatError("ASCII (P2) PGM is not supported; use binary P5")
    if blob[:2] != b"P5":
        raise FormatError("not a PGM file (missing P5 magic)")
    # header tokens: width, height, maxval; '#' comment lines allowed
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(blob) and blob[i:i + 1].isspace():
            i += 1
        if i < len(blob) and blob[i:i + 1] == b"#":
            while i < len(blob) and blob[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(blob) and not blob[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        tokens.append(blob[i:j])
        i = j
    i += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"malformed PGM header: {exc}") from exc
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval} (need 255)")
    raster = blob[i:i + w * h]
    if len(raster) != w * h:
        raise FormatError("PGM raster shorter than header promises")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(h, w)
    return data.astype(float) / 255.0
