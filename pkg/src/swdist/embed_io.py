"""Loading, validation, persistence and splitting of embedding matrices.

The on-disk matrix format is a deliberately narrow subset of the NumPy
``.npy`` v1.0 format: C-order, little-endian, dtype ``<f4`` or ``<f8``,
exactly two dimensions.  The reader/writer below is self-contained so the
accepted subset is explicit and the error reporting precise; emitted files
are bit-compatible with ``numpy.save``.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArityError,
    CapacityError,
    DataError,
    FormatError,
    ShapeError,
    WriteError,
)

ROW_NORM_TOL = 1e-3

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCRS = {"<f4": np.float32, "<f8": np.float64}
_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class EmbeddingSet:
    """An N x d matrix of embedding vectors standing for an empirical measure.

    ``data`` is always float64, C-contiguous and read-only; ``normalized``
    is computed at construction and is true iff every row has unit l2 norm
    within ``ROW_NORM_TOL``.  ``storage_dtype`` records the on-disk element
    type ('f4' or 'f8') used by :func:`save_matrix`.
    """

    data: np.ndarray
    dataset_id: str = ""
    backbone_id: str = ""
    storage_dtype: str = "f8"
    normalized: bool = field(init=False, default=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"embedding data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"embedding data must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("embedding data contains NaN or Inf entries")
        if self.storage_dtype not in ("f4", "f8"):
            raise FormatError(f"unsupported storage dtype {self.storage_dtype!r}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        norms = np.linalg.norm(arr, axis=1)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "normalized", bool(np.all(np.abs(norms - 1.0) <= ROW_NORM_TOL)))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SplitPair:
    """Two disjoint, equal-size index subsets of one embedding set."""

    a_indices: np.ndarray
    b_indices: np.ndarray
    split_id: int
    seed: int

    def __post_init__(self):
        a = np.asarray(self.a_indices, dtype=np.int64)
        b = np.asarray(self.b_indices, dtype=np.int64)
        if a.size != b.size:
            raise ShapeError("split halves must have equal size")
        if np.intersect1d(a, b).size:
            raise DataError("split halves must be disjoint")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a_indices", a)
        object.__setattr__(self, "b_indices", b)


@dataclass(frozen=True)
class ManifestEntry:
    dataset: str
    condition: str
    severity: float | None
    path: str
    backbone: str = ""


@dataclass(frozen=True)
class DatasetManifest:
    """Index of embedding files by (dataset, condition, severity, backbone)."""

    entries: tuple[ManifestEntry, ...]
    root: Path | None = None

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = (e.dataset, e.condition, e.severity, e.backbone)
            if key in seen:
                raise DataError(f"duplicate manifest entry {key}")
            seen.add(key)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def datasets(self) -> list[str]:
        return sorted({e.dataset for e in self.entries})

    def clean_entry(self, dataset: str) -> ManifestEntry | None:
        for e in self.entries:
            if e.dataset == dataset and e.condition == "clean":
                return e
        return None

    def conditions(self, dataset: str) -> list[str]:
        """Degradation condition labels for one dataset, excluding 'clean'."""
        return sorted({e.condition for e in self.entries
                       if e.dataset == dataset and e.condition != "clean"})

    def severity_entries(self, dataset: str, condition: str) -> list[ManifestEntry]:
        """Entries of one (dataset, degradation) cell, sorted by severity."""
        rows = [e for e in self.entries if e.dataset == dataset and e.condition == condition]
        return sorted(rows, key=lambda e: (e.severity is None, e.severity))


def _parse_header(raw: bytes) -> tuple[np.dtype, tuple[int, int]]:
    try:
        header = ast.literal_eval(raw.decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"unparseable matrix header: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"unexpected matrix header keys: {header!r}")
    descr = header["descr"]
    if descr not in _SUPPORTED_DESCRS:
        raise FormatError(f"unsupported dtype {descr!r} (need little-endian f4 or f8)")
    if header["fortran_order"] is not False:
        raise FormatError("Fortran-ordered matrix files are not supported")
    shape = header["shape"]
    if not (isinstance(shape, tuple) and all(isinstance(s, int) and s >= 0 for s in shape)):
        raise FormatError(f"malformed shape in header: {shape!r}")
    if len(shape) != 2:
        raise ShapeError(f"matrix file must hold a 2-D array, got shape {shape}")
    return np.dtype(descr), shape


def load_matrix(path, dataset_id: str | None = None, backbone_id: str = "") -> EmbeddingSet:
    """Load an embedding matrix from a ``.npy`` v1.0 subset file.

    Data is widened to float64 internally regardless of the file dtype.
    The ``normalized`` flag is computed from the row norms.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        preamble = fh.read(10)
        if len(preamble) < 10 or preamble[:6] != _MAGIC:
            raise FormatError(f"{path} is not a matrix file (bad magic)")
        major, minor = preamble[6], preamble[7]
        if (major, minor) != (1, 0):
            raise FormatError(f"{path}: unsupported format version {major}.{minor}")
        (hlen,) = struct.unpack("<H", preamble[8:10])
        dtype, shape = _parse_header(fh.read(hlen))
        payload = fh.read()
    expected = shape[0] * shape[1] * dtype.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path} contains NaN or Inf entries")
    return EmbeddingSet(
        data=arr.astype(np.float64),
        dataset_id=path.stem if dataset_id is None else dataset_id,
        backbone_id=backbone_id,
        storage_dtype="f4" if dtype.itemsize == 4 else "f8",
    )


def _build_header(descr: str, shape: tuple[int, int]) -> bytes:
    body = "{'descr': '%s', 'fortran_order': False, 'shape': (%d, %d), }" % (
        descr, shape[0], shape[1])
    # Pad with spaces so magic + version + length + header is 64-byte aligned,
    # terminated by newline; matches numpy.save byte-for-byte.
    unpadded = len(_MAGIC) + 2 + 2 + len(body) + 1
    pad = (64 - unpadded % 64) % 64
    header = body + " " * pad + "\n"
    return _MAGIC + b"\x01\x00" + struct.pack("<H", len(header)) + header.encode("latin1")


def save_matrix(embedding_set: EmbeddingSet, path) -> None:
    """Write an embedding set to ``path`` in the ``.npy`` v1.0 subset format.

    Uses the set's ``storage_dtype``; a load after save reproduces the data
    bit-exactly at that precision.
    """
    if embedding_set.n < 1 or embedding_set.d < 1:
        raise ShapeError("refusing to write an empty matrix")
    descr = "<" + embedding_set.storage_dtype
    payload = np.ascontiguousarray(embedding_set.data.astype(_SUPPORTED_DESCRS[descr]))
    try:
        with open(path, "wb") as fh:
            fh.write(_build_header(descr, (embedding_set.n, embedding_set.d)))
            fh.write(payload.tobytes(order="C"))
    except OSError as exc:
        raise WriteError(f"cannot write matrix to {path}: {exc}") from exc


def random_splits(embedding_set: EmbeddingSet, r: int, half_size: int, seed: int) -> list[SplitPair]:
    """Draw ``r`` disjoint equal-half index splits, without replacement within a pair.

    Each repetition draws a fresh 2*half_size subset (subsets may overlap
    across repetitions).  Fully determined by (seed, split index).
    """
    if r < 1:
        raise ArityError("need at least one split repetition")
    if half_size < 1:
        raise ArityError("half_size must be at least 1")
    n = embedding_set.n
    if 2 * half_size > n:
        raise CapacityError(
            f"cannot draw 2x{half_size} distinct indices from {n} rows"
        )
    pairs = []
    for i in range(r):
        rng = np.random.default_rng([seed & _SEED_MASK, i])
        idx = rng.choice(n, size=2 * half_size, replace=False)
        pairs.append(SplitPair(idx[:half_size], idx[half_size:], split_id=i, seed=seed))
    return pairs


def load_manifest(path) -> DatasetManifest:
    """Load a dataset manifest: a JSON array of condition records.

    Each record is {"dataset", "condition", "severity", "path", "backbone"};
    every referenced matrix file must exist.
    """
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise FormatError(f"{path}: manifest must be a top-level JSON array")
    entries = []
    for rec in raw:
        missing = {"dataset", "condition", "path"} - set(rec)
        if missing:
            raise FormatError(f"{path}: manifest record missing keys {sorted(missing)}")
        sev = rec.get("severity")
        entries.append(ManifestEntry(
            dataset=str(rec["dataset"]),
            condition=str(rec["condition"]),
            severity=None if sev is None else float(sev),
            path=str(rec["path"]),
            backbone=str(rec.get("backbone", "")),
        ))
    manifest = DatasetManifest(entries=tuple(entries), root=path.parent)
    for e in manifest.entries:
        p = manifest.resolve(e)
        if not p.exists():
            raise DataError(f"manifest references missing file: {p}")
    return manifest


def save_manifest(manifest: DatasetManifest, path) -> None:
    rows = [
        {"dataset": e.dataset, "condition": e.condition, "severity": e.severity,
         "path": e.path, "backbone": e.backbone}
        for e in manifest.entries
    ]
    try:
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise WriteError(f"cannot write manifest to {path}: {exc}") from exc
