"""Solution directories: metadata.json plus one CSV per field u_j.

Each CSV has a ``#`` header line naming the grid geometry and then one
comma-separated row per x index (row-major, ``nan`` off the active set).
The metadata records the configuration, Newton history and a sha256
checksum per field file, which ``load_solution`` verifies.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path

import numpy as np

from ..grid import Grid2D
from ..weights import MINUS_INFINITY_WEIGHT, RDifferential, WeightField
from .solver import GridSolution

FORMAT_VERSION = 1


class IntegrityError(RuntimeError):
    """A solution directory is missing files or a field file fails its checksum."""


def _weight_to_dict(weight) -> dict:
    if weight is MINUS_INFINITY_WEIGHT:
        return {"kind": "minus-infinity"}
    if isinstance(weight, RDifferential):
        return {"kind": "r-differential", **weight.to_dict()}
    if isinstance(weight, WeightField) and weight.source is not None:
        return {"kind": "r-differential", **weight.source.to_dict()}
    raise TypeError("only r-differential and minus-infinity weights can be persisted")


def weight_from_dict(d: dict):
    if d.get("kind") == "minus-infinity":
        return MINUS_INFINITY_WEIGHT
    return RDifferential.from_dict(d)


def _field_csv(values: np.ndarray, grid: Grid2D, j: int) -> bytes:
    geo = grid.describe()
    header = "# field=u_{} kind={} h={!r} nx={} ny={} x0={!r} y0={!r} offset={!r},{!r}".format(
        j, geo["kind"], geo["h"], geo["nx"], geo["ny"], geo["x0"], geo["y0"], *geo["offset"]
    )
    buf = io.StringIO()
    np.savetxt(buf, values, delimiter=",", fmt="%.17g", header=header[2:], comments="# ")
    return buf.getvalue().encode()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save_solution(sol: GridSolution, directory, config: dict | None = None) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for k in range(sol.u.shape[0]):
        name = f"u_{k + 1}.csv"
        data = _field_csv(sol.u[k], sol.grid, k + 1)
        _atomic_write(out / name, data)
        files[name] = hashlib.sha256(data).hexdigest()
    meta = {
        "format": FORMAT_VERSION,
        "config": config or {},
        "rank": sol.rank,
        "grid": sol.grid.describe(),
        "weight": _weight_to_dict(sol.weight),
        "boundary": sol.boundary_kind,
        "exact": sol.exact,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "converged": sol.converged,
        "history": list(sol.history),
        "files": files,
    }
    _atomic_write(out / "metadata.json", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
    return out


def load_solution(directory) -> GridSolution:
    src = Path(directory)
    meta_path = src / "metadata.json"
    if not meta_path.is_file():
        raise IntegrityError(f"no metadata.json in {src}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"metadata.json is not valid JSON: {exc}") from exc
    grid = Grid2D.from_description(meta["grid"])
    rank = int(meta["rank"])
    fields = []
    for k in range(1, rank):
        name = f"u_{k}.csv"
        path = src / name
        if not path.is_file():
            raise IntegrityError(f"missing field file {name}")
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != meta["files"].get(name):
            raise IntegrityError(f"checksum mismatch for {name}")
        arr = np.loadtxt(io.StringIO(data.decode()), delimiter=",", ndmin=2)
        if arr.shape != grid.shape:
            raise IntegrityError(f"{name} has shape {arr.shape}, grid expects {grid.shape}")
        fields.append(arr)
    return GridSolution(
        rank,
        grid,
        weight_from_dict(meta["weight"]),
        np.stack(fields),
        meta["boundary"],
        iterations=int(meta["iterations"]),
        residual=float(meta["residual"]),
        converged=bool(meta["converged"]),
        history=list(meta["history"]),
        exact=meta.get("exact"),
    )
