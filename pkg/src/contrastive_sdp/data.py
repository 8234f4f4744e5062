"""Contrastive samples, their lifted score matrices, and dataset I/O.

A sample is an anchor x, a positive y, one or more negatives z_j, and a
label b in {-1, +1}. The contrastive score of a representation W on a
triple is g_W(x, y, z) = ||Wx - Wz||^2 - ||Wx - Wy||^2, and the lifted
matrix U = b * ((x-z)(x-z)^T - (x-y)(x-y)^T) satisfies
<W^T W, U> = b * g_W(x, y, z), which is what makes the hinge ERM convex
in the Gram variable.

Datasets serialize to JSON lines: a header object {"dim", "k", "meta"}
followed by one object {"x", "y", "z", "b"} per sample, UTF-8 with LF
line endings. Floats round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ParseError


@dataclass
class ContrastiveSample:
    """One contrastive observation: anchor, positive, negatives, label.

    For k >= 2 negatives the label is fixed to +1 (the positive is stored
    first by convention, so the label carries no extra information).
    """

    x: np.ndarray
    y: np.ndarray
    negatives: np.ndarray  # shape (k, d)
    label: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        negatives = np.asarray(self.negatives, dtype=float)
        if negatives.ndim == 1:
            negatives = negatives[None, :]
        self.negatives = negatives
        if self.x.ndim != 1 or self.y.ndim != 1 or negatives.ndim != 2:
            raise InvalidInput("x, y must be vectors and negatives a (k, d) array")
        d = self.x.size
        if self.y.size != d or negatives.shape[1] != d:
            raise InvalidInput("all vectors in a sample must share one dimension")
        if negatives.shape[0] < 1:
            raise InvalidInput("at least one negative example is required")
        if self.label not in (-1, 1):
            raise InvalidInput(f"label must be -1 or +1, got {self.label!r}")
        if negatives.shape[0] >= 2 and self.label != 1:
            raise InvalidInput("multi-negative samples carry label +1")
        self.label = int(self.label)

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def k(self) -> int:
        return self.negatives.shape[0]

    @property
    def z(self) -> np.ndarray:
        """The single negative; only defined for k = 1."""
        if self.k != 1:
            raise InvalidInput("sample has more than one negative")
        return self.negatives[0]


@dataclass
class Dataset:
    dim: int
    k: int
    samples: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1 or self.k < 1:
            raise InvalidInput("dim and k must be at least 1")
        for s in self.samples:
            if s.dim != self.dim or s.k != self.k:
                raise InvalidInput("sample shape does not match dataset header")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def g_value(w, x, y, z) -> float:
    """Contrastive score ||Wx - Wz||^2 - ||Wx - Wy||^2."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if w.ndim != 2:
        raise InvalidInput("representation must be a matrix")
    d = w.shape[1]
    if x.shape != (d,) or y.shape != (d,) or z.shape != (d,):
        raise InvalidInput("vector dimensions do not match the representation")
    dz = w @ (x - z)
    dy = w @ (x - y)
    return float(dz @ dz - dy @ dy)


def build_u(sample: ContrastiveSample) -> np.ndarray:
    """Signed lift b * ((x-z)(x-z)^T - (x-y)(x-y)^T) for a k=1 sample."""
    if sample.k != 1:
        raise InvalidInput("build_u handles k = 1 only; use build_u_multi")
    dz = sample.x - sample.z
    dy = sample.x - sample.y
    return sample.label * (np.outer(dz, dz) - np.outer(dy, dy))


def build_u_multi(sample: ContrastiveSample) -> np.ndarray:
    """Per-negative lifts (x-z_j)(x-z_j)^T - (x-y)(x-y)^T, shape (k, d, d)."""
    if sample.label != 1:
        raise InvalidInput("multi-negative lift requires label +1")
    dz = sample.x[None, :] - sample.negatives
    dy = sample.x - sample.y
    return np.einsum("ki,kj->kij", dz, dz) - np.outer(dy, dy)[None, :, :]


def margin_of(w, sample: ContrastiveSample) -> float:
    """Signed margin of W on a sample.

    k = 1: b * g_W(x, y, z). k >= 2: the smallest per-negative score
    min_j g_W(x, y, z_j).
    """
    if sample.k == 1:
        return sample.label * g_value(w, sample.x, sample.y, sample.z)
    return min(g_value(w, sample.x, sample.y, z) for z in sample.negatives)


def u_tensor(ds: Dataset) -> np.ndarray:
    """Stacked signed lifts of a k=1 dataset, shape (n, d, d)."""
    if ds.k != 1:
        raise InvalidInput("dataset has k > 1; use u_tensor_multi")
    if len(ds) == 0:
        return np.zeros((0, ds.dim, ds.dim))
    xs = np.stack([s.x for s in ds])
    ys = np.stack([s.y for s in ds])
    zs = np.stack([s.negatives[0] for s in ds])
    b = np.array([s.label for s in ds], dtype=float)
    dz = xs - zs
    dy = xs - ys
    u = np.einsum("ni,nj->nij", dz, dz) - np.einsum("ni,nj->nij", dy, dy)
    return b[:, None, None] * u


def u_tensor_multi(ds: Dataset) -> np.ndarray:
    """Stacked per-negative lifts, shape (n, k, d, d); labels must be +1."""
    if any(s.label != 1 for s in ds):
        raise InvalidInput("multi-negative lift requires all labels +1")
    if len(ds) == 0:
        return np.zeros((0, ds.k, ds.dim, ds.dim))
    xs = np.stack([s.x for s in ds])
    ys = np.stack([s.y for s in ds])
    zs = np.stack([s.negatives for s in ds])  # (n, k, d)
    dz = xs[:, None, :] - zs
    dy = xs - ys
    u_neg = np.einsum("nki,nkj->nkij", dz, dz)
    u_pos = np.einsum("ni,nj->nij", dy, dy)
    return u_neg - u_pos[:, None, :, :]


def write_dataset(ds: Dataset, sink) -> None:
    """Write a dataset as JSON lines to a path or text file object."""
    if hasattr(sink, "write"):
        _write_stream(ds, sink)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            _write_stream(ds, fh)


def _write_stream(ds: Dataset, fh) -> None:
    header = {"dim": ds.dim, "k": ds.k, "meta": ds.metadata}
    fh.write(json.dumps(header, sort_keys=True) + "\n")
    for s in ds.samples:
        rec = {
            "x": s.x.tolist(),
            "y": s.y.tolist(),
            "z": s.negatives.tolist(),
            "b": s.label,
        }
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_dataset(source) -> Dataset:
    """Parse a JSON-lines dataset from a path or text file object.

    Raises ParseError with the offending line number on malformed records,
    inconsistent dimensions, or labels outside {-1, +1}.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    header = None
    header_line = None
    for lineno, raw in enumerate(lines, start=1):
        if raw.strip():
            header_line = lineno
            try:
                header = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON header: {exc.msg}", line=lineno) from exc
            break
    if header is None:
        raise ParseError("empty stream: missing dataset header", line=1)
    if not isinstance(header, dict) or "dim" not in header or "k" not in header:
        raise ParseError('header must be an object with "dim" and "k"', line=header_line)
    try:
        dim = int(header["dim"])
        k = int(header["k"])
    except (TypeError, ValueError) as exc:
        raise ParseError("header dim/k must be integers", line=header_line) from exc
    meta = header.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError('header "meta" must be an object', line=header_line)

    samples = []
    for lineno, raw in enumerate(lines, start=1):
        if lineno <= header_line or not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON record: {exc.msg}", line=lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("record must be a JSON object", line=lineno)
        missing = [key for key in ("x", "y", "z", "b") if key not in obj]
        if missing:
            raise ParseError(f"record missing keys: {', '.join(missing)}", line=lineno)
        try:
            sample = ContrastiveSample(
                x=np.asarray(obj["x"], dtype=float),
                y=np.asarray(obj["y"], dtype=float),
                negatives=np.asarray(obj["z"], dtype=float),
                label=obj["b"],
            )
        except (InvalidInput, TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if sample.dim != dim or sample.k != k:
            raise ParseError(
                f"sample shape (d={sample.dim}, k={sample.k}) does not match "
                f"header (d={dim}, k={k})",
                line=lineno,
            )
        samples.append(sample)
    try:
        return Dataset(dim=dim, k=k, samples=samples, metadata=meta)
    except InvalidInput as exc:
        raise ParseError(str(exc), line=header_line) from exc
