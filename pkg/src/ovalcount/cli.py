"""Command-line experiment runner.

Every subcommand draws lattice number i from its own seed, derived from the
root seed and i, so outputs do not depend on ``--workers``.  Results are
JSON-lines streams, JSON reports, distribution files and CSV histograms in
the ``--out`` directory, each carrying the configuration echo.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .counting import error_normalized
from .errors import DomainError, ResourceCapExceeded
from .fourier import ApproximantConfig, h_A, phases_batch, s_A_prime
from .geometry import OvalCurve
from .lattice import UnimodularLattice
from .limit_law import (LimitConfig, draw_reduced_lattice, limit_sample, mean_report,
                        moment_diagnostics)
from .siegel import TestFunction, small_ball_probability, validate_mean, validate_variance
from .stats import EmpiricalDistribution, chi_square_uniform, ks_distance

log = logging.getLogger("ovalcount")

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3


@dataclass
class ExperimentConfig:
    curve_text: str = "disk"
    t: list[float] = field(default_factory=lambda: [100.0])
    A: list[float] = field(default_factory=lambda: [40.0])
    tolerance: float | None = None
    alpha: tuple[float, float] = (0.0, 0.0)
    n_lattice: int = 1000
    n_theta: int = 1
    seed: int = 0
    out: str = "results"
    condition_min_norm: float | None = None
    workers: int = 1
    fixed_lattice: str | None = None
    x_grid: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 1.0])
    radii: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    epsilons: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    mode: str = "primitive"
    count_file: str | None = None
    limit_file: str | None = None
    approximants: bool = False

    def __post_init__(self):
        if self.n_lattice < 0 or self.n_theta < 1 or self.workers < 1:
            raise DomainError("n_lattice must be >= 0, n_theta and workers >= 1")
        if any(t <= 0 for t in self.t) or list(self.t) != sorted(self.t):
            raise DomainError("the t grid must be positive and ascending")
        if any(a <= 0 for a in self.A):
            raise DomainError("A must be positive")
        self.curve = io.parse_curve(self.curve_text)

    def echo(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "curve"}
        d["alpha"] = list(self.alpha)
        d["curve_spec"] = io.curve_to_spec(self.curve)
        return d

    def out_dir(self) -> Path:
        p = Path(self.out)
        p.mkdir(parents=True, exist_ok=True)
        return p

    def m_max(self) -> int | None:
        if self.tolerance is None:
            return None
        return ApproximantConfig.certified(self.A[0], self.tolerance, self.curve).m_max


def sample_seed(root: int, index: int) -> int:
    return int(np.random.SeedSequence([root, index]).generate_state(1)[0])


def _lattice_for(cfg_min_norm, fixed_basis, root: int, index: int) -> UnimodularLattice:
    if fixed_basis is not None:
        return UnimodularLattice(fixed_basis)
    rng = np.random.default_rng(sample_seed(root, index))
    return draw_reduced_lattice(rng, cfg_min_norm).lattice()


def _pool_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (8 * workers))))


def _fixed_basis(cfg: ExperimentConfig):
    return None if cfg.fixed_lattice is None else io.read_lattice(cfg.fixed_lattice).basis


# ---------------------------------------------------------------------- count
def _count_task(args):
    curve, ts, alpha, root, i, min_norm, fixed, A, m_max, with_approx = args
    L = _lattice_for(min_norm, fixed, root, i)
    out = []
    for t in ts:
        try:
            s = error_normalized(curve, L, t, alpha, seed=sample_seed(root, i))
        except ResourceCapExceeded as exc:
            out.append({"index": i, "t": t, "skipped": str(exc)})
            continue
        if with_approx:
            acfg = ApproximantConfig(A=A, m_max=m_max)
            s.approximants = {"h_A": h_A(curve, L, t, acfg), "s_A_prime": s_A_prime(curve, L, t, acfg, alpha)}
        rec = s.to_record()
        rec["index"] = i
        out.append(rec)
    return out


def count_records(cfg: ExperimentConfig) -> list[dict]:
    fixed = _fixed_basis(cfg)
    n = 1 if (fixed is not None and cfg.n_lattice > 0) else cfg.n_lattice
    tasks = [(cfg.curve, cfg.t, cfg.alpha, cfg.seed, i, cfg.condition_min_norm, fixed, cfg.A[0],
              cfg.m_max(), cfg.approximants) for i in range(n)]
    recs = [r for chunk in _pool_map(_count_task, tasks, cfg.workers) for r in chunk]
    for r in recs:
        if "skipped" in r:
            log.warning("sample %d at t=%s skipped: %s", r["index"], r["t"], r["skipped"])
    return recs


def run_count(cfg: ExperimentConfig) -> Path:
    recs = count_records(cfg)
    path = cfg.out_dir() / "count.jsonl"
    io.write_jsonl(path, [{"header": cfg.echo()}] + recs)
    return path


def _load_count(path) -> list[dict]:
    return [r for r in io.read_jsonl(path) if "header" not in r and "skipped" not in r]


# ---------------------------------------------------------------------- gap
def _gap_task(args):
    curve, pairs, alpha, root, i, min_norm, fixed, m_max = args
    L = _lattice_for(min_norm, fixed, root, i)
    out = []
    for A, t in pairs:
        exact = error_normalized(curve, L, t, alpha).normalized
        s = s_A_prime(curve, L, t, ApproximantConfig(A=A, m_max=m_max), alpha)
        out.append({"index": i, "seed": sample_seed(root, i), "A": A, "m_max": m_max, "t": t,
                    "delta": abs(exact - s), "s_A_prime": s, "normalized_error": exact})
    return out


def gap_pairs(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    A, T = list(cfg.A), list(cfg.t)
    if len(A) == 1:
        A = A * len(T)
    if len(T) == 1:
        T = T * len(A)
    if len(A) != len(T):
        raise DomainError("--A and --t must have equal lengths (or one of them a single value)")
    return list(zip(A, T))


def gap_report(records: list[dict], pairs, x_grid) -> dict:
    rows = []
    for A, t in pairs:
        d = np.array([r["delta"] for r in records if r["A"] == A and r["t"] == t])
        rows.append({"A": A, "t": t, "n": int(d.size),
                     "exceed": {repr(float(x)): float((d >= x).mean()) if d.size else float("nan")
                                for x in x_grid}})
    monotone = all(rows[j + 1]["exceed"][k] <= rows[j]["exceed"][k]
                   for j in range(len(rows) - 1) for k in rows[j]["exceed"])
    return {"pairs": rows, "non_increasing": monotone}


def run_gap(cfg: ExperimentConfig) -> Path:
    pairs = gap_pairs(cfg)
    fixed = _fixed_basis(cfg)
    tasks = [(cfg.curve, pairs, cfg.alpha, cfg.seed, i, cfg.condition_min_norm, fixed, cfg.m_max())
             for i in range(cfg.n_lattice)]
    recs = [r for chunk in _pool_map(_gap_task, tasks, cfg.workers) for r in chunk]
    out = cfg.out_dir()
    io.write_jsonl(out / "gap.jsonl", [{"header": cfg.echo()}] + recs)
    report = {"config": cfg.echo(), **gap_report(recs, pairs, cfg.x_grid)}
    (out / "gap_report.json").write_text(json.dumps(report, indent=1) + "\n")
    return out / "gap_report.json"


# ---------------------------------------------------------------------- limit
def _limit_cfg(cfg: ExperimentConfig) -> LimitConfig:
    return LimitConfig(A=cfg.A[-1], m_max=cfg.m_max(), n_theta=cfg.n_theta, n_lattice=cfg.n_lattice,
                       seed=cfg.seed, condition_min_norm=cfg.condition_min_norm)


def _limit_task(args):
    curve, alpha, lcfg, i = args
    return limit_sample(curve, alpha, lcfg, i)


def limit_distribution(cfg: ExperimentConfig) -> EmpiricalDistribution | None:
    lcfg = _limit_cfg(cfg)
    chunks = _pool_map(_limit_task, [(cfg.curve, cfg.alpha, lcfg, i) for i in range(cfg.n_lattice)],
                       cfg.workers)
    if not chunks:
        return None
    return EmpiricalDistribution(np.concatenate(chunks), {"kind": "limit_series", "config": cfg.echo()})


def run_limit(cfg: ExperimentConfig) -> Path:
    out = cfg.out_dir()
    dist = limit_distribution(cfg)
    report = {"config": cfg.echo()}
    if dist is not None:
        dist.save(out / "limit.dist")
        dist.write_histogram_csv(out / "limit_hist.csv")
        report["mean"] = mean_report(dist) if len(dist) > 1 else None
        if len(dist) >= 1000:
            m = moment_diagnostics(dist, [1.2, 2.0], seed=cfg.seed)
            report["moments"] = {"sizes": m.sizes,
                                 "estimates": {repr(p): v for p, v in m.estimates.items()},
                                 "spread": {repr(p): v for p, v in m.spread.items()},
                                 "stable": {repr(p): v for p, v in m.stable.items()},
                                 "increasing": {repr(p): v for p, v in m.increasing.items()},
                                 "tail_slope": m.tail_slope}
    (out / "limit_report.json").write_text(json.dumps(report, indent=1) + "\n")
    return out / "limit_report.json"


# ---------------------------------------------------------------------- converge
def run_converge(cfg: ExperimentConfig) -> Path:
    if cfg.count_file:
        recs = _load_count(cfg.count_file)
    else:
        recs = [r for r in count_records(cfg) if "skipped" not in r]
    if cfg.limit_file:
        limit = EmpiricalDistribution.load(cfg.limit_file)
    else:
        limit = limit_distribution(cfg)
    rows = []
    for t in cfg.t:
        vals = [r["normalized"] for r in recs if r["t"] == t]
        ks = ks_distance(vals, limit) if (vals and limit is not None) else None
        rows.append({"t": t, "n": len(vals), "ks": ks})
    ks_vals = [r["ks"] for r in rows if r["ks"] is not None]
    report = {"config": cfg.echo(), "rows": rows,
              "decreasing": all(b < a for a, b in zip(ks_vals, ks_vals[1:]))}
    path = cfg.out_dir() / "converge_report.json"
    path.write_text(json.dumps(report, indent=1) + "\n")
    return path


# ---------------------------------------------------------------------- siegel
def run_siegel(cfg: ExperimentConfig) -> Path:
    reports = []
    for R in cfg.radii:
        reports.append(validate_mean(TestFunction.ball(R), cfg.n_lattice, cfg.seed, cfg.mode).to_dict())
    var = [dict(validate_variance(TestFunction.ball(e), cfg.n_lattice, cfg.seed, cfg.mode).to_dict(),
                epsilon=e) for e in cfg.epsilons]
    small = small_ball_probability(cfg.epsilons, cfg.n_lattice, cfg.seed).to_dict()
    path = cfg.out_dir() / "siegel_report.json"
    path.write_text(json.dumps({"config": cfg.echo(), "mean": reports, "variance": var,
                                "small_ball": small}, indent=1) + "\n")
    return path


# ---------------------------------------------------------------------- equidistribution
def _equidist_task(args):
    root, i, min_norm = args
    rng = np.random.default_rng(sample_seed(root, i))
    rb = draw_reduced_lattice(rng, min_norm)
    return np.concatenate([rb.e1, rb.e2])


def equidist_phases(curve: OvalCurve, n: int, seed: int, t: float, workers: int = 1,
                    ks=((1, 0), (1, 1)), min_norm: float | None = None) -> np.ndarray:
    """Phases theta_k(L_i, t) for each k in ``ks``, shape (n, len(ks))."""
    bases = np.array(_pool_map(_equidist_task, [(seed, i, min_norm) for i in range(n)], workers))
    if n == 0:
        return np.zeros((0, len(ks)))
    e1, e2 = bases[:, :2], bases[:, 2:]
    return np.column_stack([phases_batch(curve, e1, e2, k, t) for k in ks])


def run_equidist(cfg: ExperimentConfig) -> Path:
    t = max(cfg.t)
    th = equidist_phases(cfg.curve, cfg.n_lattice, cfg.seed, t, cfg.workers,
                         min_norm=cfg.condition_min_norm)
    report = {"config": cfg.echo(), "t": t, "n": int(th.shape[0])}
    p10, s10 = chi_square_uniform(th[:, 0], 20, return_statistic=True)
    p11, s11 = chi_square_uniform(th[:, 1], 20, return_statistic=True)
    pj, sj = chi_square_uniform(th, 5, return_statistic=True)
    report.update({"theta_1_0": {"p_value": p10, "statistic": s10, "bins": 20},
                   "theta_1_1": {"p_value": p11, "statistic": s11, "bins": 20},
                   "joint": {"p_value": pj, "statistic": sj, "bins_per_dim": 5}})
    path = cfg.out_dir() / "equidist_report.json"
    path.write_text(json.dumps(report, indent=1) + "\n")
    return path


# ---------------------------------------------------------------------- argument parsing
def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return vals[0], vals[1]


COMMANDS = {"count": run_count, "gap": run_gap, "limit": run_limit, "converge": run_converge,
            "siegel": run_siegel, "equidist": run_equidist}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ovalcount", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", default="disk", help="preset (disk, ellipse(a,b)) or curve JSON file")
    common.add_argument("--t", type=_floats, default=[100.0], help="comma-separated ascending t grid")
    common.add_argument("--A", type=_floats, default=[40.0], help="cut-off(s) A")
    common.add_argument("--tolerance", type=float, default=None,
                        help="m-series tolerance (default: exact summation)")
    common.add_argument("--alpha", type=_pair, default=(0.0, 0.0), help="translation x,y")
    common.add_argument("--n-lattice", type=int, default=1000)
    common.add_argument("--n-theta", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--condition-min-norm", type=float, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default="results")
    common.add_argument("--fixed-lattice", default=None, help="lattice dump file")
    common.add_argument("--x-grid", type=_floats, default=[0.1, 0.25, 0.5, 1.0])
    common.add_argument("--radii", type=_floats, default=[0.5, 1.0, 2.0])
    common.add_argument("--epsilons", type=_floats, default=[0.05, 0.1, 0.2])
    common.add_argument("--mode", choices=["primitive", "all"], default="primitive")
    common.add_argument("--count-file", default=None)
    common.add_argument("--limit-file", default=None)
    common.add_argument("--approximants", action="store_true", help="attach h_A and s_A_prime to samples")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(curve_text=ns.curve, t=ns.t, A=ns.A, tolerance=ns.tolerance,
                            alpha=tuple(ns.alpha), n_lattice=ns.n_lattice, n_theta=ns.n_theta,
                            seed=ns.seed, out=ns.out, condition_min_norm=ns.condition_min_norm,
                            workers=ns.workers, fixed_lattice=ns.fixed_lattice, x_grid=ns.x_grid,
                            radii=ns.radii, epsilons=ns.epsilons, mode=ns.mode,
                            count_file=ns.count_file, limit_file=ns.limit_file,
                            approximants=ns.approximants)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = config_from_args(ns)
        path = COMMANDS[ns.command](cfg)
    except (DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ResourceCapExceeded as exc:
        log.error("resource cap exceeded: %s", exc)
        return EXIT_RESOURCE
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
