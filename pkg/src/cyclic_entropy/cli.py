"""Batch runner: ``cyclic-entropy {spectrum,solve,verify,entropy,lemma-pq} --config C --out D``.

Every run reads one JSON config and writes JSON/CSV/SVG into ``--out``.
Outputs contain no timestamps, so the same config and seed reproduce them
byte for byte.  Exit codes: 0 success, 1 a check failed or Newton did not
converge, 2 usage or configuration error.

Randomness (``lemma-pq`` only) comes from ``numpy.random.Philox`` keyed by
one 64-bit seed: ``--seed`` if given, else the config's ``seed``, else 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import shannon, spectrum
from .grid import Grid2D
from .heatmap import heatmap_svg
from .toda import analysis
from .toda.io import IntegrityError, load_solution, save_solution, weight_from_dict
from .toda.solver import NewtonStagnation, solve_dirichlet
from .toda.system import BOUNDARY_KINDS, BoundaryError
from .weights import FLAT

log = logging.getLogger("cyclic_entropy")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_DIVERGENCE_R = [256, 512, 1024, 2048, 4096]


class UsageError(ValueError):
    pass


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if x is None else (repr(x) if isinstance(x, float) else x) for x in row])
    path.write_text(buf.getvalue())


def _resolve(path, base: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"config is missing required key {key!r}")
    return cfg[key]


# spectrum


def cmd_spectrum(cfg: dict, out: Path, base: Path) -> int:
    betas = _require(cfg, "betas")
    r_values = [int(r) for r in _require(cfg, "r_values")]
    if not r_values:
        raise UsageError("r_values is empty")
    if not betas:
        raise UsageError("betas is empty")
    div_r = [int(r) for r in cfg.get("divergence_r", DEFAULT_DIVERGENCE_R)]
    rows, summary, failed = [], {}, False
    for beta in betas:
        beta = float(beta)
        entry: dict = {"beta": beta}
        try:
            if beta == 0:
                raise ValueError("beta must be non-zero")
            limit = spectrum.gap_limit(beta) if beta > -1 else None
        except ValueError as exc:
            failed = True
            entry["error"] = str(exc)
            rows.extend([beta, r, None, None, None, None, str(exc)] for r in r_values)
            summary[repr(beta)] = entry
            continue
        entry["limit"] = limit if limit is not None else "-inf"
        gaps, sandwich_ok = [], True
        for r in r_values:
            try:
                y = spectrum.ensemble_entropy(r, beta) - math.log(r)
                gap = None if limit is None else y - limit
                sw = None
                if beta < 0 and r >= 4:
                    sw = spectrum.sandwich_check(r, beta).ok
                    sandwich_ok &= sw
                rows.append([beta, r, y + math.log(r), y, gap, sw, None])
                if gap is not None:
                    gaps.append(gap)
            except (ValueError, ArithmeticError) as exc:
                failed = True
                rows.append([beta, r, None, None, None, None, str(exc)])
        if beta < 0:
            entry["sandwich_ok"] = bool(sandwich_ok)
            failed |= not sandwich_ok
        if limit is not None:
            entry["final_gap"] = gaps[-1] if gaps else None
            entry["gaps_monotone"] = bool(np.all(np.diff(np.abs(gaps)) < 0)) if len(gaps) > 1 else None
            entry["verdict"] = "converges"
        else:
            fit = spectrum.divergence_fit(beta, div_r)
            entry.update(
                verdict="diverges" if fit.decreasing else "inconclusive",
                divergence_r=div_r,
                total_drop=fit.total_drop,
                fit_model=fit.model,
                fit_coefficient=fit.coefficient,
            )
            failed |= not fit.decreasing
        summary[repr(beta)] = entry
    _write_csv(out / "spectrum.csv", ["beta", "r", "S", "S_minus_log_r", "gap", "sandwich_ok", "error"], rows)
    _dump_json(out / "summary.json", {"betas": summary, "passed": not failed})
    return EXIT_FAIL if failed else EXIT_OK


# solve


def grid_from_config(g: dict) -> Grid2D:
    kind = _require(g, "kind")
    h = float(_require(g, "h"))
    offset = tuple(g["offset"]) if "offset" in g else None
    if kind == "disc":
        return Grid2D.disc(float(_require(g, "radius")), h, offset)
    if kind == "rectangle":
        return Grid2D.rectangle(*map(float, _require(g, "bounds")), h, offset)
    raise UsageError(f"unknown grid kind {kind!r}")


def weight_from_config(cfg: dict):
    rank = int(_require(cfg, "rank"))
    q = cfg.get("q", {"zeros": []})
    if q == "minus-infinity":
        return weight_from_dict({"kind": "minus-infinity"})
    return weight_from_dict({"rank": rank, **q})


def cmd_solve(cfg: dict, out: Path, base: Path) -> int:
    rank = int(_require(cfg, "rank"))
    boundary = cfg.get("boundary", "flat-like")
    if boundary not in BOUNDARY_KINDS or boundary == "custom":
        raise UsageError(f"boundary must be 'flat-like' or 'hyperbolic-like', got {boundary!r}")
    try:
        grid = grid_from_config(_require(cfg, "grid"))
        weight = weight_from_config(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid instance: {exc}") from exc
    try:
        sol = solve_dirichlet(
            rank,
            weight,
            grid,
            boundary=boundary,
            tol=float(cfg.get("tol", 1e-10)),
            max_iter=int(cfg.get("max_iter", 50)),
            continuation=cfg.get("continuation"),
            raise_on_failure=False,
        )
    except BoundaryError as exc:
        raise UsageError(str(exc)) from exc
    save_solution(sol, out, config=cfg)
    log.info("solve: %d iterations, residual %.3e, converged=%s", sol.iterations, sol.residual, sol.converged)
    return EXIT_OK if sol.converged else EXIT_FAIL


# verify / entropy


def _entropy_checks(ef: analysis.EntropyField, kind: str) -> list:
    s = ef.summary
    flat = kind == FLAT
    return [
        analysis.Check("S_min >= S_{r,beta} - 1e-8", s["S_lower"] - 1e-8, s["S_min"], node=tuple(s["S_min_node"])),
        analysis.Check(
            "S_max < log r" if not flat else "S_max <= log r (flat case: equality)",
            s["S_max"],
            s["log_r"],
            strict=not flat,
            node=tuple(s["S_max_node"]),
        ),
    ]


def _load(cfg: dict, base: Path):
    path = _resolve(_require(cfg, "solution"), base)
    if not path.is_dir():
        raise FileNotFoundError(f"solution directory {path} does not exist")
    return load_solution(path)


def _betas(cfg: dict) -> list:
    betas = [float(b) for b in cfg.get("betas", [-0.5, 1.0])]
    if any(b == 0 for b in betas):
        raise UsageError("beta must be non-zero")
    return betas


def cmd_verify(cfg: dict, out: Path, base: Path) -> int:
    sol = _load(cfg, base)
    betas = _betas(cfg)
    margin = cfg.get("margin")
    m = analysis.metric_fields(sol)
    adj = analysis.check_adjacent_bounds(m, margin)
    chain = analysis.sup_chain_check(m, margin)
    report = {
        "rank": sol.rank,
        "kind": m.kind,
        "residual": sol.sup_residual(),
        "adjacent_bounds": adj.as_dict(),
        "sup_chain": chain.as_dict(),
        "entropy": {},
    }
    passed = adj.passed and chain.passed and sol.converged
    heat = bool(cfg.get("heatmaps", True))
    if heat:
        for j in range(1, m.n + 1):
            (out / f"sigma_{j}.svg").write_text(heatmap_svg(m.sigma(j), f"sigma_{j} = u_{j - 1} - u_{j}"))
    for beta in betas:
        ef = analysis.entropy_field(m, beta, margin)
        checks = _entropy_checks(ef, m.kind)
        passed &= all(c.passed for c in checks)
        report["entropy"][repr(beta)] = {**ef.summary, "checks": [c.as_dict() for c in checks]}
        if heat:
            (out / f"entropy_beta_{beta:g}.svg").write_text(heatmap_svg(ef.S, f"S(r={sol.rank}, beta={beta:g})"))
    report["passed"] = bool(passed)
    _dump_json(out / "verify.json", report)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_entropy(cfg: dict, out: Path, base: Path) -> int:
    sol = _load(cfg, base)
    betas = _betas(cfg)
    m = analysis.metric_fields(sol)
    summary, passed = {}, True
    for beta in betas:
        ef = analysis.entropy_field(m, beta, cfg.get("margin"))
        checks = _entropy_checks(ef, m.kind)
        passed &= all(c.passed for c in checks)
        summary[repr(beta)] = {**ef.summary, "checks": [c.as_dict() for c in checks]}
        stem = f"entropy_beta_{beta:g}"
        np.savetxt(out / f"{stem}.csv", ef.S, delimiter=",", fmt="%.17g",
                   header=json.dumps(sol.grid.describe(), sort_keys=True), comments="# ")
        (out / f"{stem}.svg").write_text(heatmap_svg(ef.S, f"S(r={sol.rank}, beta={beta:g})"))
    _dump_json(out / "entropy.json", {"rank": sol.rank, "kind": m.kind, "betas": summary, "passed": bool(passed)})
    return EXIT_OK if passed else EXIT_FAIL


# lemma-pq


def cmd_lemma_pq(cfg: dict, out: Path, base: Path, seed: int) -> int:
    r_min, r_max = int(cfg.get("r_min", 3)), int(cfg.get("r_max", 8))
    count = int(cfg.get("count", 10_000))
    equal_count = int(cfg.get("equal_count", 100))
    if r_min < 2 or r_max < r_min:
        raise UsageError(f"invalid rank range {r_min}..{r_max}")
    if count < 0 or equal_count < 0:
        raise UsageError("counts must be non-negative")
    rng = np.random.Generator(np.random.Philox(seed))
    per_rank, violations, worst_equal = {}, [], 0.0
    for r in range(r_min, r_max + 1):
        min_margin = math.inf
        for k in range(count):
            p, q = shannon.sample_dominating_pair(r, rng)
            v = shannon.ratio_domination_verdict(p, q)
            min_margin = min(min_margin, v.margin)
            if not v.consistent:
                violations.append({"r": r, "sample": k, "margin": v.margin})
        eq = 0.0
        for _ in range(equal_count):
            p, q = shannon.sample_equal_ratio_pair(r, rng)
            eq = max(eq, abs(shannon.entropy(p) - shannon.entropy(q)))
        worst_equal = max(worst_equal, eq)
        per_rank[str(r)] = {
            "pairs": count,
            "min_margin": None if math.isinf(min_margin) else min_margin,
            "equal_pairs": equal_count,
            "max_equal_gap": eq,
        }
    warnings = []
    if count == 0:
        warnings.append("count is 0: the domination check is vacuous")
        log.warning(warnings[-1])
    passed = not violations and worst_equal <= 1e-12
    report = {
        "generator": "numpy.random.Philox",
        "seed": seed,
        "ranks": per_rank,
        "violations": violations,
        "max_equal_gap": worst_equal,
        "warnings": warnings,
        "passed": passed,
    }
    _dump_json(out / "lemma_pq.json", report)
    return EXIT_OK if passed else EXIT_FAIL


# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclic-entropy", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["spectrum", "solve", "verify", "entropy", "lemma-pq"])
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", required=True, help="output directory (created if needed)")
    parser.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg_path = Path(args.config)
    try:
        cfg = json.loads(cfg_path.read_text())
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    except (OSError, json.JSONDecodeError, UsageError) as exc:
        print(f"error: cannot read config {cfg_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = cfg_path.resolve().parent
    try:
        if args.command == "lemma-pq":
            seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
            if not 0 <= seed < 2**64:
                raise UsageError("seed must be a 64-bit unsigned integer")
            return cmd_lemma_pq(cfg, out, base, seed)
        handler = {"spectrum": cmd_spectrum, "solve": cmd_solve, "verify": cmd_verify, "entropy": cmd_entropy}
        return handler[args.command](cfg, out, base)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IntegrityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (NewtonStagnation, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
