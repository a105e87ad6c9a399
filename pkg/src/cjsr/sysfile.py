"""JSON description files for switched systems.

Schema (version 1): an object with

    schema_version  1
    dim             state dimension n
    num_labels      number of matrices N
    nodes           automaton node count
    matrices        N nested row-major n-by-n arrays, label order
    edges           list of [from, to, label], all 1-based

Unknown keys are ignored so that enriched outputs (word tables from the
lift command, for example) still parse. Indices are 1-based throughout,
matching the library convention.
"""

import json

import numpy as np

from .automaton import Automaton
from .errors import DimensionMismatch, SystemFileError
from .system import SwitchedSystem

SCHEMA_VERSION = 1


def _require(data, key, kind, context):
    if key not in data:
        raise SystemFileError(f"{context}: missing required key {key!r}")
    value = data[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise SystemFileError(f"{context}: key {key!r} must be an integer")
    if kind is list and not isinstance(value, list):
        raise SystemFileError(f"{context}: key {key!r} must be an array")
    return value


def system_from_dict(data, context="system file"):
    """Build a validated SwitchedSystem from a schema-1 mapping."""
    if not isinstance(data, dict):
        raise SystemFileError(f"{context}: top level must be an object")
    version = _require(data, "schema_version", int, context)
    if version != SCHEMA_VERSION:
        raise SystemFileError(
            f"{context}: schema_version {version} unsupported, expected "
            f"{SCHEMA_VERSION}"
        )
    dim = _require(data, "dim", int, context)
    num_labels = _require(data, "num_labels", int, context)
    nodes = _require(data, "nodes", int, context)
    raw_mats = _require(data, "matrices", list, context)
    raw_edges = _require(data, "edges", list, context)

    if dim < 1:
        raise SystemFileError(f"{context}: dim must be >= 1, got {dim}")
    if len(raw_mats) != num_labels:
        raise DimensionMismatch(
            f"{context}: num_labels = {num_labels} but {len(raw_mats)} "
            f"matrices given"
        )
    matrices = []
    for idx, entry in enumerate(raw_mats, start=1):
        try:
            mat = np.asarray(entry, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise SystemFileError(
                f"{context}: matrix {idx} is not numeric: {exc}"
            ) from None
        if mat.shape != (dim, dim):
            raise DimensionMismatch(
                f"{context}: matrix {idx} has shape {mat.shape}, expected "
                f"({dim}, {dim})"
            )
        matrices.append(mat)

    edges = []
    for pos, entry in enumerate(raw_edges):
        if (
            not isinstance(entry, list)
            or len(entry) != 3
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in entry)
        ):
            raise SystemFileError(
                f"{context}: edge at position {pos} must be [from, to, label] "
                f"integers, got {entry!r}"
            )
        edges.append(tuple(entry))

    automaton = Automaton(nodes, num_labels, edges)
    return SwitchedSystem(automaton, tuple(matrices))


def system_to_dict(system):
    """Serialize a SwitchedSystem to a schema-1 mapping."""
    aut = system.automaton
    return {
        "schema_version": SCHEMA_VERSION,
        "dim": system.dim,
        "num_labels": aut.num_labels,
        "nodes": aut.num_nodes,
        "matrices": [system.matrix(s).tolist() for s in range(1, aut.num_labels + 1)],
        "edges": [list(e) for e in aut.edges],
    }


def load_system(path):
    """Read and validate a system file, with the path in error messages."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SystemFileError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise SystemFileError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from None
    return system_from_dict(data, context=str(path))


def save_system(system, path, extra=None):
    """Write a system file; extra keys (word tables and the like) merge in."""
    data = system_to_dict(system)
    if extra:
        for key in extra:
            if key in data:
                raise ValueError(f"extra key {key!r} collides with the schema")
        data.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
