"""Experiment harness: sweeps, brute-force verification, CSV/JSON reports.

The master CSV carries one row per grid point with the fixed column schema

    run_id, family, k, lambda, mu, rho, D, eps, algorithm, T, eps_star,
    moreau_grad_surrogate, moreau_grad_true, certified, regime, wall_ms,
    seed, config_hash, version

and is byte-identical across reruns with the same config and seed (timing is
reported in the per-run JSON details; the wall_ms column is fixed to 0 to keep
the CSV deterministic).  Grid points are independent: with --jobs > 1 they run
in worker processes and rows are sorted by run_id before writing.
"""

from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError
from .geometry import Ball, Interval
from .gridsearch import grid_max
from .instances import (HardInstanceSpec, RegimeError, build_instance,
                        certificate, surrogate_primal_oracle, true_primal_oracle)
from .krylov import QuadraticForm, approx_max, solve_reduced
from .moreau import (PrimalOracle, ProxNonConvergedError, moreau_grad,
                     primal_from_grid, primal_from_surrogate_grid,
                     primal_from_surrogate_krylov)
from .problems import ProblemInstance, fd_grad, make_ball_cubic, make_intro_example
from .solvers import BudgetExceededError, SolverConfig, solve
from .surrogate import SurrogateModel

CSV_COLUMNS = ("run_id", "family", "k", "lambda", "mu", "rho", "D", "eps",
               "algorithm", "T", "eps_star", "moreau_grad_surrogate",
               "moreau_grad_true", "certified", "regime", "wall_ms", "seed",
               "config_hash", "version")

_SWEEP_ORDER = ("lambda", "mu", "rho", "D", "eps", "k")


def brute_force_max(p: ProblemInstance, x, resolution: int = 801):
    """Grid maximization of f(x, .) over Y (dim(Y) <= 2) with one refinement pass."""
    if p.dim_y > 2:
        raise ValueError("brute_force_max supports dim(Y) <= 2")
    if p.vectorized and p.dim_y == 1:
        x0 = float(np.atleast_1d(np.asarray(x, float))[0])
        return grid_max(lambda yv: p.value(x0, yv), p.domain_y, resolution,
                        vectorized=True)
    return grid_max(lambda y: p.value(x, y), p.domain_y, resolution)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _grid_points(cfg: dict):
    sweep = cfg.get("sweep", {})
    keys = [k for k in _SWEEP_ORDER if k in sweep]
    if not keys:
        yield 0, {}
        return
    for run_id, combo in enumerate(itertools.product(*(sweep[k] for k in keys))):
        yield run_id, dict(zip(keys, combo))


def _instance_from_config(cfg: dict, point: dict):
    """Build (problem, spec-or-None, params dict) for one grid point."""
    inst = dict(cfg.get("instance", {}))
    if not inst:
        raise ConfigError("missing [instance] section")
    for key in ("lambda", "mu", "rho", "D", "k"):
        if key in point:
            inst[key] = point[key]
    fam = inst.get("family", "F")
    if fam in ("F", "S"):
        try:
            spec = HardInstanceSpec(
                family=fam, k=int(inst.get("k", 0)), s=int(inst.get("s", 0)),
                lam=float(inst["lambda"]), mu=float(inst["mu"]),
                rho=float(inst.get("rho", 0.0)), D=float(inst["D"]),
                a=inst.get("a"))
        except KeyError as exc:
            raise ConfigError(f"[instance] missing {exc} for family {fam}") from exc
        p = build_instance(spec)
        if "x_lo" in inst or "x_hi" in inst:
            p = p.with_domains(domain_x=Interval(float(inst["x_lo"]),
                                                 float(inst["x_hi"])))
        return p, spec
    if fam == "intro":
        return make_intro_example(), None
    if fam == "ball_cubic":
        kw = {}
        for src, dst in (("lambda", "lam"), ("mu", "mu"), ("rho", "rho"),
                         ("radius", "radius"), ("dim_y", "dim_y"),
                         ("quad_scale", "quad_scale"), ("instance_seed", "seed")):
            if src in inst:
                kw[dst] = inst[src]
        if "x_lo" in inst and "x_hi" in inst:
            kw["x_interval"] = (float(inst["x_lo"]), float(inst["x_hi"]))
        return make_ball_cubic(**kw), None
    raise ConfigError(f"unknown instance family {fam!r}")


def _primal_from_phi_exact(p: ProblemInstance) -> PrimalOracle:
    """Numeric primal oracle from an instance's own exact phi (FD subgradients)."""
    phi = lambda x: float(p.phi_exact(x))
    return PrimalOracle(phi=phi, subgrad=lambda x: fd_grad(phi, x),
                        weak_convexity=p.profile.lam, domain=p.domain_x,
                        mode="closed_form")


def _true_oracle_for(p: ProblemInstance, spec, resolution: int) -> PrimalOracle:
    if spec is not None:
        return true_primal_oracle(spec, domain=p.domain_x)
    if p.dim_y <= 2:
        return primal_from_grid(p, resolution)
    if p.phi_exact is not None:
        return _primal_from_phi_exact(p)
    raise ConfigError("no verification oracle available for this instance")


def _surrogate_oracle_for(p: ProblemInstance, spec, k: int, y_hat,
                          resolution: int) -> PrimalOracle:
    if spec is not None and p.domain_x is not build_instance(spec).domain_x:
        oracle = surrogate_primal_oracle(spec, float(np.atleast_1d(y_hat)[0]), k=k,
                                         domain=p.domain_x)
        return oracle
    if spec is not None:
        return surrogate_primal_oracle(spec, float(np.atleast_1d(y_hat)[0]), k=k)
    surr = SurrogateModel(base=p, k=k, center=y_hat)
    if p.dim_y <= 2:
        return primal_from_surrogate_grid(surr, resolution)
    if k == 2 and isinstance(p.domain_y, Ball):
        return primal_from_surrogate_krylov(surr)
    raise ConfigError("no surrogate verification oracle available")


def _run_one(cfg: dict, cfg_hash: str, run_id: int, point: dict, mode: str) -> dict:
    """Execute one grid point; returns {'row': <csv row dict>, 'detail': ...}."""
    seed = int(cfg["experiment"]["seed"]) + run_id
    t0 = time.perf_counter()
    row = {c: "" for c in CSV_COLUMNS}
    row.update(run_id=run_id, seed=seed, config_hash=cfg_hash, version=__version__,
               wall_ms=0, certified="", regime="")
    detail: dict = {"run_id": run_id, "point": point, "mode": mode}

    if mode == "krylov-bench":
        kcfg = cfg.get("krylov", {})
        d = int(kcfg.get("d", 32))
        R = float(kcfg.get("R", 1.0))
        delta = float(kcfg.get("delta", 1e-4))
        q_fail = float(kcfg.get("q_fail", 0.1))
        bound = float(kcfg.get("norm_bound", 1.0))
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((d, d))
        H = 0.5 * (M + M.T)
        H *= bound / np.linalg.norm(H, 2)
        g = rng.standard_normal(d)
        qf = QuadraticForm.from_dense(H, g)
        res = approx_max(qf, R, delta, bound, q_fail, rng)
        z, _ = solve_reduced(H, g, R)
        exact = 0.5 * float(z @ H @ z) + float(g @ z)
        gap = max(exact - res.value, 0.0)
        row.update(family="krylov", k=2, eps=delta, algorithm="krylov",
                   T=res.m_used, eps_star=gap, certified=bool(gap <= delta),
                   **{"lambda": bound, "mu": 0.0, "rho": 0.0, "D": 2 * R})
        detail.update(gap=gap, predicted_gap=res.predicted_gap, m_used=res.m_used,
                      branch=res.branch, hvp_calls=qf.hvp_count)
        detail["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return {"row": row, "detail": detail}

    p, spec = _instance_from_config(cfg, point)
    prof = p.profile
    row.update(family=spec.family if spec else p.name, k=prof.k,
               **{"lambda": prof.lam, "mu": prof.mu, "rho": prof.rho_k,
                  "D": p.domain_y.diameter()})
    if spec is not None:
        row["regime"] = spec.regime
    vcfg = cfg.get("verify", {})
    resolution = int(vcfg.get("grid_resolution", 2001))
    stat_tol = float(vcfg.get("stationarity_tol", 1e-10))
    eps = float(point.get("eps", cfg.get("solver", {}).get("epsilon", 0.1)))
    row["eps"] = eps

    if mode == "certify":
        if spec is None:
            raise ConfigError("certify mode needs a hard-instance family F/S")
        cert = certificate(spec, eps)
        row.update(algorithm="certificate", T=0, eps_star=cert.bound,
                   moreau_grad_surrogate=abs(cert.surrogate_moreau_grad),
                   moreau_grad_true=abs(cert.true_moreau_grad),
                   certified=bool(cert.holds(stat_tol)), regime=cert.regime)
        detail.update(proposition=cert.proposition, y_hat=cert.y_hat,
                      x_star=cert.x_star, bound=cert.bound,
                      effective=cert.effective.__dict__)
        detail["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return {"row": row, "detail": detail}

    if mode == "check-diameter":
        from .theory import check_theorem1
        verdict = check_theorem1(prof, p.domain_y.diameter(), eps)
        row.update(algorithm="theorem1", T=0, eps_star=verdict.lhs,
                   certified=verdict.admissible)
        detail.update(verdict=verdict.to_dict())
        detail["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return {"row": row, "detail": detail}

    # mode == "run"
    scfg = dict(cfg.get("solver", {}))
    algorithm = scfg.get("algorithm", "alg1")
    y_hat = scfg.get("y_hat", "center")
    if isinstance(y_hat, str):
        if y_hat != "center":
            raise ConfigError(f"[solver].y_hat must be a number or 'center'")
        y_hat = p.domain_y.chebyshev_center()
    else:
        y_hat = np.full(p.dim_y, float(y_hat))
    x0 = np.full(p.dim_x, float(scfg.get("x0", 0.0)))
    solver_cfg = SolverConfig(
        x0=x0, y_hat=y_hat, epsilon=eps, algorithm=algorithm,
        coupled=scfg.get("coupled"), naive=bool(scfg.get("naive", False)),
        p_fail=float(scfg.get("p_fail", 0.1)), q_fail=float(scfg.get("q_fail", 0.1)),
        T_override=scfg.get("T_override"), seed=seed,
        iteration_cap=int(scfg.get("iteration_cap", 10**7)))
    try:
        x_out, trace = solve(p, solver_cfg)
    except ValueError as exc:
        raise ConfigError(f"solver setup: {exc}") from exc
    row.update(algorithm=algorithm, T=trace.T, eps_star=float(trace.best_eps))
    detail.update(trace=trace.summary(), x_out=[float(v) for v in x_out])

    if vcfg.get("check_moreau", True):
        k_order = {"alg1": 0, "alg2": 1, "alg3": 2}[algorithm]
        lam_bar = prof.lambda_bar(p.domain_y.diameter()) if k_order else prof.lam
        true_oracle = _true_oracle_for(p, spec, resolution)
        mg_true = moreau_grad(true_oracle, x_out, lam_bar,
                              tol=float(vcfg.get("prox_tol", 1e-7)))
        surr_oracle = _surrogate_oracle_for(p, spec, k_order, y_hat, resolution)
        mg_surr = moreau_grad(surr_oracle, x_out, lam_bar,
                              tol=float(vcfg.get("prox_tol", 1e-7)))
        row.update(moreau_grad_true=float(np.linalg.norm(mg_true)),
                   moreau_grad_surrogate=float(np.linalg.norm(mg_surr)),
                   certified=bool(np.linalg.norm(mg_true) <= eps))
    detail["wall_ms"] = 1e3 * (time.perf_counter() - t0)
    return {"row": row, "detail": detail, "trace_obj": trace}


def _worker(args):
    cfg, cfg_hash, run_id, point, mode = args
    out = _run_one(cfg, cfg_hash, run_id, point, mode)
    out.pop("trace_obj", None)  # not picklable across processes, re-exported locally
    return out


def evaluate_assertions(cfg: dict, rows: list) -> list:
    """Returns the list of failed assertion names (empty when all hold)."""
    asserts = cfg.get("assert", {})
    failures = []

    def rowval(r, c):
        return r[c]

    for name, target in asserts.items():
        if name == "certified":
            ok = all(r["certified"] is True or r["certified"] == "true"
                     for r in rows) == target if target else all(
                r["certified"] in (False, "false") for r in rows)
        elif name == "not_certified":
            ok = all(r["certified"] in (False, "false") for r in rows) == target
        elif name == "surrogate_stationary":
            ok = all(float(r["moreau_grad_surrogate"]) <= 1e-10 for r in rows
                     if r["moreau_grad_surrogate"] != "") == target
        elif name == "true_violation":
            ok = all(float(r["moreau_grad_true"]) >= float(r["eps_star"]) - 1e-12
                     for r in rows if r["moreau_grad_true"] != "") == target
        elif name == "admissible":
            ok = all((r["certified"] is True or r["certified"] == "true") == target
                     for r in rows)
        elif name in ("min_certified_fraction", "min_pass_fraction"):
            frac = sum(1 for r in rows
                       if r["certified"] is True or r["certified"] == "true") \
                / max(len(rows), 1)
            ok = frac >= target
        elif name == "max_eps_star":
            ok = all(float(r["eps_star"]) <= target for r in rows
                     if r["eps_star"] != "")
        else:  # unreachable: schema rejects unknown keys
            ok = False
        if not ok:
            failures.append(name)
    return failures


def run_experiment(cfg: dict, cfg_hash: str, mode: str, out_dir=None,
                   jobs: int = 1) -> int:
    """Execute all grid points, write reports, return the process exit code."""
    name = cfg["experiment"]["name"]
    out_dir = out_dir or cfg["experiment"].get("out_dir") \
        or os.environ.get("SMALLMAX_OUT_DIR", "smallmax-out")
    os.makedirs(out_dir, exist_ok=True)
    points = list(_grid_points(cfg))

    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(
                    _worker, [(cfg, cfg_hash, rid, pt, mode) for rid, pt in points]))
        else:
            results = [_run_one(cfg, cfg_hash, rid, pt, mode) for rid, pt in points]
    except ConfigError:
        raise
    except (BudgetExceededError, ProxNonConvergedError, RegimeError) as exc:
        print(f"error: {exc}")
        return 3

    results.sort(key=lambda r: r["row"]["run_id"])
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(csv_path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for res in results:
            fh.write(",".join(_fmt(res["row"][c]) for c in CSV_COLUMNS) + "\n")
    for res in results:
        rid = res["row"]["run_id"]
        with open(os.path.join(out_dir, f"{name}_run{rid:04d}.json"), "w") as fh:
            json.dump(res["detail"], fh, indent=2, sort_keys=True, default=str)
        tr = res.get("trace_obj")
        if tr is not None:
            tr.to_csv(os.path.join(out_dir, f"{name}_run{rid:04d}_trace.csv"))

    failures = evaluate_assertions(cfg, [r["row"] for r in results])
    if failures:
        print(f"assertion failures: {', '.join(failures)}")
        return 1
    print(f"{name}: {len(results)} runs -> {csv_path}")
    return 0
