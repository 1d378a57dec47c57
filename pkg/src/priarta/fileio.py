"""On-disk text formats, all bit-exact and diffable.

Raw datasets:            Embeddings:
    PRIARTA-RAW 1            PRIARTA-EMB 1
    m p k                    n d R
    <k class probs>          <n lines of d floats>
    <m lines: label + p floats>

Floats are written as shortest round-trip decimals, space-separated, with no
trailing whitespace. Configs, encoder specs, and reports are canonical JSON.
"""

import json

import numpy as np

from .encoder import RawDataset
from .errors import FileFormatError
from .stats import CLIP_SLACK, EmbeddingSet

RAW_MAGIC = "PRIARTA-RAW 1"
EMB_MAGIC = "PRIARTA-EMB 1"


def _fmt(value) -> str:
    return repr(float(value))


def _read_lines(path) -> list:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def _parse_floats(line: str, expected: int, path, lineno: int) -> list:
    parts = line.split(" ")
    if len(parts) != expected:
        raise FileFormatError(f"{path}:{lineno}: expected {expected} fields, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FileFormatError(f"{path}:{lineno}: {exc}") from exc


def _parse_header_ints(line: str, count: int, path) -> list:
    parts = line.split(" ")
    if len(parts) != count:
        raise FileFormatError(f"{path}:2: header needs {count} fields, got {len(parts)}")
    return parts


def write_raw_dataset(path, data: RawDataset):
    k = data.class_probs.shape[0]
    lines = [RAW_MAGIC, f"{data.count} {data.dim} {k}"]
    lines.append(" ".join(_fmt(p) for p in data.class_probs))
    for label, row in zip(data.labels, data.points):
        lines.append(f"{int(label)} " + " ".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_raw_dataset(path) -> RawDataset:
    lines = _read_lines(path)
    if not lines or lines[0] != RAW_MAGIC:
        raise FileFormatError(f"{path}:1: expected header {RAW_MAGIC!r}")
    if len(lines) < 3:
        raise FileFormatError(f"{path}: truncated, no dimension header")
    parts = _parse_header_ints(lines[1], 3, path)
    try:
        m, p, k = (int(v) for v in parts)
    except ValueError as exc:
        raise FileFormatError(f"{path}:2: {exc}") from exc
    if m < 1 or p < 1 or k < 1:
        raise FileFormatError(f"{path}:2: dimensions must be positive, got {m} {p} {k}")
    if len(lines) != 3 + m:
        raise FileFormatError(f"{path}: header declares {m} rows, file has {len(lines) - 3}")
    probs = _parse_floats(lines[2], k, path, 3)
    points = np.empty((m, p))
    labels = np.empty(m, dtype=int)
    for i in range(m):
        lineno = 4 + i
        parts = lines[3 + i].split(" ", 1)
        if len(parts) != 2:
            raise FileFormatError(f"{path}:{lineno}: expected label and {p} coordinates")
        try:
            labels[i] = int(parts[0])
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
        points[i] = _parse_floats(parts[1], p, path, lineno)
    return RawDataset(points, labels, np.asarray(probs))


def write_embeddings(path, embeddings: EmbeddingSet):
    lines = [EMB_MAGIC, f"{embeddings.count} {embeddings.dim} {_fmt(embeddings.clip_radius)}"]
    for row in embeddings.vectors:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_embeddings(path) -> EmbeddingSet:
    """The clipped flag is recomputed from the data: set only when every row
    actually fits the declared radius."""
    lines = _read_lines(path)
    if not lines or lines[0] != EMB_MAGIC:
        raise FileFormatError(f"{path}:1: expected header {EMB_MAGIC!r}")
    if len(lines) < 2:
        raise FileFormatError(f"{path}: truncated, no dimension header")
    parts = _parse_header_ints(lines[1], 3, path)
    try:
        n, d = int(parts[0]), int(parts[1])
        radius = float(parts[2])
    except ValueError as exc:
        raise FileFormatError(f"{path}:2: {exc}") from exc
    if n < 2 or d < 1 or radius <= 0:
        raise FileFormatError(f"{path}:2: need n >= 2, d >= 1, R > 0, got {lines[1]!r}")
    if len(lines) != 2 + n:
        raise FileFormatError(f"{path}: header declares {n} rows, file has {len(lines) - 2}")
    vectors = np.empty((n, d))
    for i in range(n):
        vectors[i] = _parse_floats(lines[2 + i], d, path, 3 + i)
    inside = bool(np.all(np.linalg.norm(vectors, axis=1) <= radius * (1.0 + CLIP_SLACK)))
    return EmbeddingSet(vectors, radius, clipped=inside)


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: parse error at byte {exc.pos}: {exc.msg}") from exc


def save_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n")


def read_dataset_any(path):
    """Sniff the header: RawDataset or EmbeddingSet."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first == RAW_MAGIC:
        return read_raw_dataset(path)
    if first == EMB_MAGIC:
        return read_embeddings(path)
    raise FileFormatError(f"{path}:1: unrecognized header {first!r}")
