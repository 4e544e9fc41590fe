"""Model persistence.

Binary layout: 8-byte magic, uint32 version, uint32 header length, a UTF-8
JSON header describing scalars and array shapes, then every array as
little-endian bytes in header order.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .forest import RfModel, Tree
from .svm import SvmModel

MAGIC = b"TSPMODEL"
VERSION = 1
_PREFIX = struct.Struct("<8sII")
_TREE_FIELDS = ("feature", "threshold", "left", "right", "counts")


def _pack(kind: str, scalars: dict, arrays: list[tuple[str, np.ndarray]]) -> bytes:
    specs = []
    blobs = []
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        dtype = "<f8" if arr.dtype.kind == "f" else "<i8"
        specs.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        blobs.append(arr.astype(dtype).tobytes())
    header = json.dumps({"kind": kind, "scalars": scalars, "arrays": specs}, sort_keys=True).encode()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(blobs)


def _unpack(buf: bytes):
    if len(buf) < _PREFIX.size:
        raise ValueError("not a model file (too short)")
    magic, version, hlen = _PREFIX.unpack_from(buf)
    if magic != MAGIC:
        raise ValueError("not a model file")
    if version != VERSION:
        raise ValueError(f"unsupported model version {version}")
    header = json.loads(buf[_PREFIX.size : _PREFIX.size + hlen])
    pos = _PREFIX.size + hlen
    arrays = {}
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        if pos + count * dtype.itemsize > len(buf):
            raise ValueError("model payload truncated")
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).reshape(spec["shape"])
        arrays[spec["name"]] = arr.astype(dtype.newbyteorder("="))
        pos += count * dtype.itemsize
    if pos != len(buf):
        raise ValueError("trailing bytes after model payload")
    return header["kind"], header["scalars"], arrays


def dumps_model(model) -> bytes:
    if isinstance(model, SvmModel):
        scalars = {"bias": model.bias, "cost": model.cost, "epochs": model.epochs,
                   "max_violation": model.max_violation, "bias_scale": model.bias_scale,
                   "class_weights": {str(k): v for k, v in model.class_weights.items()}}
        return _pack("svm", scalars, [("weights", model.weights), ("dual_coefficients", model.dual_coefficients)])
    if isinstance(model, RfModel):
        scalars = {"m_try": model.m_try, "seed": model.seed, "n_features": model.n_features,
                   "min_leaf": model.min_leaf, "n_trees": model.n_trees}
        arrays = [("classes", model.classes)]
        for t, tree in enumerate(model.trees):
            arrays += [(f"tree{t}.{f}", getattr(tree, f)) for f in _TREE_FIELDS]
        return _pack("rf", scalars, arrays)
    raise TypeError(f"cannot serialise {type(model).__name__}")


def loads_model(buf: bytes):
    kind, s, a = _unpack(buf)
    if kind == "svm":
        return SvmModel(a["weights"], float(s["bias"]), a["dual_coefficients"], float(s["cost"]),
                        {int(k): float(v) for k, v in s["class_weights"].items()},
                        int(s["epochs"]), float(s["max_violation"]), float(s.get("bias_scale", 1.0)))
    if kind == "rf":
        trees = tuple(Tree(*(a[f"tree{t}.{f}"] for f in _TREE_FIELDS)) for t in range(s["n_trees"]))
        return RfModel(trees, int(s["m_try"]), int(s["seed"]), a["classes"], int(s["n_features"]),
                       int(s["min_leaf"]))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, "rb") as fh:
        return loads_model(fh.read())


def model_to_json(model) -> dict:
    """Human-readable dump: SVM weights or the full node structure of every tree."""
    if isinstance(model, SvmModel):
        return {"kind": "svm", "weights": model.weights.tolist(), "bias": model.bias, "cost": model.cost,
                "class_weights": {str(k): v for k, v in model.class_weights.items()},
                "n_support": int(np.count_nonzero(model.dual_coefficients)), "epochs": model.epochs}
    if isinstance(model, RfModel):
        trees = []
        for tree in model.trees:
            nodes = []
            for i in range(tree.n_nodes):
                if tree.feature[i] < 0:
                    nodes.append({"id": i, "leaf": True, "counts": tree.counts[i].tolist()})
                else:
                    nodes.append({"id": i, "feature": int(tree.feature[i]), "threshold": float(tree.threshold[i]),
                                  "left": int(tree.left[i]), "right": int(tree.right[i])})
            trees.append(nodes)
        return {"kind": "rf", "classes": model.classes.tolist(), "m_try": model.m_try, "seed": model.seed,
                "trees": trees}
    raise TypeError(f"cannot dump {type(model).__name__}")
