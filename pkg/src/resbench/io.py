"""JSON serialization for states, theories, and result records.

Conventions: matrices are row-major nested lists, complex numbers are
[re, im] pairs, reals are emitted with 17 significant digits so records
round-trip losslessly. Loaded states are validated at 1e-8 and then
re-projected onto the exact constraint set (unit trace / unit norm /
positive spectrum).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .theories import TheoryDescriptor, theory_from_config

TOOL_VERSION = "resbench 0.1.0"

LOAD_TOL = 1e-8


def complex_pair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def matrix_to_json(mat: np.ndarray) -> list:
    return [[complex_pair(x) for x in row] for row in np.asarray(mat, dtype=complex)]


def json_to_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def vector_to_json(vec: np.ndarray) -> list:
    return [complex_pair(x) for x in np.asarray(vec, dtype=complex)]


def json_to_vector(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("vector entries must be [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def density_to_json(rho: np.ndarray) -> dict:
    return {"dim": int(rho.shape[0]), "matrix": matrix_to_json(rho)}


def pure_to_json(psi: np.ndarray) -> dict:
    return {"dim": int(psi.size), "vector": vector_to_json(psi)}


def state_from_json(data: dict):
    """Load a state file; returns ('pure', vector) or ('density', matrix)."""
    if "vector" in data:
        psi = json_to_vector(data["vector"])
        if int(data.get("dim", psi.size)) != psi.size:
            raise ValueError("declared dimension does not match the vector length")
        nrm = float(np.linalg.norm(psi))
        if abs(nrm - 1.0) > LOAD_TOL:
            raise ValueError(f"pure state norm {nrm} deviates from 1 beyond {LOAD_TOL}")
        return "pure", psi / nrm
    if "matrix" in data:
        rho = json_to_matrix(data["matrix"])
        if int(data.get("dim", rho.shape[0])) != rho.shape[0]:
            raise ValueError("declared dimension does not match the matrix size")
        if np.abs(rho - rho.conj().T).max() > LOAD_TOL:
            raise ValueError("state matrix is not Hermitian within the load tolerance")
        rho = la.herm_part(rho)
        ev, vec = np.linalg.eigh(rho)
        if float(ev.min()) < -LOAD_TOL:
            raise ValueError(f"state matrix has eigenvalue {ev.min():.3e}")
        tr = float(np.real(np.trace(rho)))
        if abs(tr - 1.0) > LOAD_TOL:
            raise ValueError(f"state matrix trace {tr} deviates from 1 beyond {LOAD_TOL}")
        rho = (vec * np.clip(ev, 0.0, None)) @ vec.conj().T
        return "density", la.herm_part(rho / np.real(np.trace(rho)))
    raise ValueError("state file needs a 'vector' or 'matrix' field")


def load_state(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_json(json.load(fh))


def load_density(path: str) -> np.ndarray:
    kind, obj = load_state(path)
    return la.projector(obj) if kind == "pure" else obj


def load_pure(path: str) -> np.ndarray:
    kind, obj = load_state(path)
    if kind != "pure":
        raise ValueError(f"{path} does not hold a pure state vector")
    return obj


def load_theory(path: str) -> TheoryDescriptor:
    with open(path, "r", encoding="utf-8") as fh:
        return theory_from_config(json.load(fh))


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()[:16]


def _encode(obj) -> str:
    """Deterministic JSON with 17-significant-digit reals."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if np.isnan(x):
            return '"nan"'
        return format(x, ".17g")
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(x) for x in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


@dataclass
class ResultRecord:
    """One CLI result: command, input digests, values, and solver metadata."""

    command: str
    inputs: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    status: str = "ok"
    gap: float = 0.0
    witness: np.ndarray | None = None
    timing_ms: int | None = None
    tool_version: str = TOOL_VERSION

    def to_json(self) -> str:
        out = {"command": self.command, "inputs": self.inputs, "values": self.values,
               "status": self.status, "gap": self.gap}
        if self.witness is not None:
            out["witness"] = matrix_to_json(self.witness)
        if self.timing_ms is not None:
            out["timing_ms"] = int(self.timing_ms)
        out["tool_version"] = self.tool_version
        return _encode(out)
