"""File formats: CSV datasets with JSON sidecars, LCTN binary tensors,
serialized networks and permutation files.

Dataset CSV: one row per instance, no header. With labels the first column
is the label (±1, or a class id reduced by one-vs-all); then N*D feature
scalars, feature-major. The sidecar (same stem, .json) records
{M, N, D, P, labeled, embedding, theta}, where N counts features.
"""

import json
import logging
import math
import re
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from .config import DEFAULT_THETA
from .data_tensor import Dataset
from .errors import ParseError, ShapeError
from .rearrange import FeaturePermutation
from .tensor_core import DenseTensor
from .tree_tn import TreeTensorNetwork

logger = logging.getLogger(__name__)

MAGIC = b"LCTN"
FORMAT_VERSION = 1
SIDECAR_KEYS = ("M", "N", "D", "P", "labeled")
EMBEDDINGS = ("raw", "sincos")

_PANDAS_LINE = re.compile(r"line (\d+)")


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_json(data, path):
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno,
                         column=e.colno) from e


# ── Datasets ──────────────────────────────────────────────────────────


def _read_sidecar(path):
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise ParseError("missing JSON sidecar", path=meta_path)
    meta = _read_json(meta_path)
    missing = [k for k in SIDECAR_KEYS if k not in meta]
    if missing:
        raise ParseError(f"sidecar lacks keys {missing}", path=meta_path)
    meta.setdefault("embedding", "raw")
    meta.setdefault("theta", DEFAULT_THETA)
    if meta["embedding"] not in EMBEDDINGS:
        raise ParseError(f"unknown embedding {meta['embedding']!r}", path=meta_path)
    return meta


def _read_cells(path):
    try:
        return pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                           skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise ParseError("dataset file is empty", path=path, line=1, column=1) from e
    except pd.errors.ParserError as e:
        m = _PANDAS_LINE.search(str(e))
        raise ParseError(f"malformed row: {e}", path=path,
                         line=int(m.group(1)) if m else None) from e


def _cell_value(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return math.nan


def _to_numbers(cells, path):
    """Convert string cells to float64, reporting the first bad cell.

    Cells go through float(), which rounds correctly, so shortest-repr
    output reads back bit for bit.
    """
    values = np.vectorize(_cell_value, otypes=[np.float64])(cells.to_numpy(dtype=object))
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        text = cells.iat[row, col]
        what = "missing value" if not isinstance(text, str) or not text else f"bad number {text!r}"
        raise ParseError(what, path=path, line=row + 1, column=col + 1)
    return values


def one_vs_all(labels, positive, seed=0):
    """±1 labels for class `positive` and a balanced, seeded instance subset."""
    labels = np.asarray(labels)
    is_pos = labels == positive
    pos = np.flatnonzero(is_pos)
    neg = np.flatnonzero(~is_pos)
    if pos.size == 0 or neg.size == 0:
        raise ShapeError(f"class {positive} leaves one side of one-vs-all empty")
    rng = np.random.default_rng(seed)
    n = min(pos.size, neg.size)
    if pos.size > n:
        pos = rng.choice(pos, size=n, replace=False)
    if neg.size > n:
        neg = rng.choice(neg, size=n, replace=False)
    keep = np.sort(np.concatenate([pos, neg]))
    return keep, np.where(is_pos[keep], 1.0, -1.0)


def load_dataset(path, one_vs_all_class=None, seed=0):
    """Read a CSV dataset and its sidecar into a Dataset (features as stored)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    meta = _read_sidecar(path)
    values = _to_numbers(_read_cells(path), path)
    M, N, D, P = (int(meta[k]) for k in ("M", "N", "D", "P"))
    labeled = bool(meta["labeled"])
    expected = N * D + (1 if labeled else 0)
    if values.shape[0] != M:
        raise ParseError(f"header says M={M}, file has {values.shape[0]} rows", path=path,
                         line=min(M, values.shape[0]) + 1)
    if values.shape[1] != expected:
        raise ParseError(f"expected {expected} columns, found {values.shape[1]}",
                         path=path, line=1, column=min(expected, values.shape[1]) + 1)
    labels = None
    features = values
    if labeled:
        labels, features = values[:, 0], values[:, 1:]
        if one_vs_all_class is not None:
            keep, labels = one_vs_all(labels, float(one_vs_all_class), seed)
            features = features[keep]
            logger.info("One-vs-all on class %s: kept %d of %d instances",
                        one_vs_all_class, keep.size, M)
        else:
            bad = np.flatnonzero(np.abs(labels) != 1.0)
            if bad.size:
                raise ParseError(f"label {labels[bad[0]]!r} is not +1 or -1", path=path,
                                 line=int(bad[0]) + 1, column=1)
    ds = Dataset(features=features.reshape(-1, N, D), labels=labels, dim=P,
                 n_original=int(meta.get("n_original", N)))
    ds.metadata.update(embedding=meta["embedding"], theta=float(meta["theta"]))
    logger.info("Loaded %s: M=%d N=%d D=%d P=%d", path.name, ds.M, ds.N, ds.D, ds.dim)
    return ds


def save_dataset(ds, path, embedding=None, theta=None):
    """Write CSV plus sidecar; floats keep full precision."""
    path = Path(path)
    columns = [pd.Series(ds.features.reshape(ds.M, -1)[:, j]) for j in range(ds.N * ds.D)]
    if ds.labeled:
        columns.insert(0, pd.Series(ds.labels.astype(np.int64)))
    frame = pd.concat(columns, axis=1)
    frame.to_csv(path, header=False, index=False, lineterminator="\n")
    meta = {
        "M": ds.M,
        "N": ds.N,
        "D": ds.D,
        "P": ds.dim,
        "labeled": ds.labeled,
        "embedding": embedding or ds.metadata.get("embedding", "raw"),
        "theta": theta if theta is not None else ds.metadata.get("theta", DEFAULT_THETA),
    }
    if ds.n_original != ds.N:
        meta["n_original"] = ds.n_original
    write_json(meta, sidecar_path(path))
    return path


# ── Binary tensors ────────────────────────────────────────────────────


def write_tensor_record(f, array):
    array = np.ascontiguousarray(array, dtype="<f8")
    f.write(MAGIC)
    f.write(struct.pack("<II", FORMAT_VERSION, array.ndim))
    f.write(struct.pack(f"<{array.ndim}Q", *array.shape))
    f.write(array.tobytes(order="C"))


def _read_exact(f, n, path):
    data = f.read(n)
    if len(data) != n:
        raise ParseError(f"truncated tensor record: wanted {n} bytes, got {len(data)}",
                         path=path)
    return data


def read_tensor_record(f, path=None):
    if _read_exact(f, 4, path) != MAGIC:
        raise ParseError("bad magic, not an LCTN tensor", path=path)
    version, ndim = struct.unpack("<II", _read_exact(f, 8, path))
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported tensor format version {version}", path=path)
    dims = struct.unpack(f"<{ndim}Q", _read_exact(f, 8 * ndim, path))
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    data = np.frombuffer(_read_exact(f, 8 * count, path), dtype="<f8")
    return DenseTensor.from_flat(dims, data)


def save_tensor(array, path):
    """Write one array (DenseTensor or ndarray) in the LCTN format."""
    if isinstance(array, DenseTensor):
        array = array.array
    with open(path, "wb") as f:
        write_tensor_record(f, array)
    return Path(path)


def load_tensor(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"tensor file not found: {path}")
    with open(path, "rb") as f:
        tensor = read_tensor_record(f, path)
        if f.read(1):
            raise ParseError("trailing bytes after tensor record", path=path)
    return tensor


# ── Networks ──────────────────────────────────────────────────────────


def save_network(tn, path):
    """JSON header at path plus node tensors (breadth-first) in path.bin."""
    path = Path(path)
    blob = path.with_suffix(".bin")
    header = {
        "N": tn.side,
        "P": tn.dim,
        "R": tn.width,
        "dims": list(tn.dims),
        "nodes": len(tn.node_tensors()),
        "blob": blob.name,
    }
    write_json(header, path)
    with open(blob, "wb") as f:
        for core in tn.node_tensors():
            write_tensor_record(f, core)
    return path


def load_network(path):
    path = Path(path)
    header = _read_json(path)
    blob = path.parent / header.get("blob", path.with_suffix(".bin").name)
    side, dim = int(header["N"]), int(header["P"])
    arity = 2 ** dim
    depth = int(side).bit_length() - 1
    levels = []
    with open(blob, "rb") as f:
        for d in range(depth + 1):
            levels.append([np.array(read_tensor_record(f, blob).array)
                           for _ in range(arity ** d)])
        if f.read(1):
            raise ParseError("trailing bytes after network tensors", path=blob)
    return TreeTensorNetwork(dims=tuple(header["dims"]), side=side, dim=dim,
                             width=int(header["R"]), levels=levels)


# ── Permutations ──────────────────────────────────────────────────────


def save_permutation(perm, path):
    write_json(perm.to_json(), path)
    return Path(path)


def load_permutation(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"permutation not found: {path}")
    data = _read_json(path)
    for key in ("P", "N", "pi"):
        if key not in data:
            raise ParseError(f"permutation file lacks {key!r}", path=path)
    return FeaturePermutation(dim=int(data["P"]), side=int(data["N"]),
                              mapping=tuple(data["pi"]),
                              provenance=tuple(data.get("cuts", ())))
