"""Command-line entry point: ``membrana <command> --config cfg.json --out DIR``.

Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .branch import StepSpec, trace_branch
from .config import RunConfig, load_config
from .curves import Flag, Model
from .eigen import principal
from .errors import (ConfigError, Degenerate, Indeterminate, MembranaError, NoPositiveSolution,
                     NotFound, SolverFailure)
from .geometry import OMEGA1, OMEGA2
from .limit import limit_convergence
from .nonlinear import (StateTriple, approximate_large_solution, evolve_parabolic,
                        positive_initial_state, semitrivial_stability, solve_coexistence,
                        solve_logistic_scalar)
from .operators import (assemble_interface, assemble_scalar, dirichlet_sigma_bc, neumann_bc,
                        robin_sigma_bc)
from .oracles import EndCondition, TranscendentalSpec, interval_eigen_oracle
from .regions import (GridSpec, estimate_mu_star, region_curves, region_map, resolve_threads)
from .report import export_csv, export_json, render_region_svg, atomic_write

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


class Run:
    """Per-invocation context: config, model, output directory and written files."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, threads: int, dump_matrix: bool):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.dump_matrix = dump_matrix
        self.params = cfg.model_params()
        self.model = Model(self.params, cfg.geometry.n_per_unit)
        self.mesh = self.model.mesh
        self.files: list[str] = []
        self.summary: dict = {}

    def csv(self, name, header, rows):
        export_csv(self.out / name, header, rows)
        self.files.append(name)

    def json(self, name, data):
        export_json(self.out / name, data)
        self.files.append(name)

    def text(self, name, text):
        atomic_write(self.out / name, text)
        self.files.append(name)

    def dump(self, name, op):
        if self.dump_matrix:
            self.text(name, op.to_coo_text())

    def state_csv(self, name, state: StateTriple):
        m = self.mesh
        v = m.restrict(state.v)
        u = m.join(state.u1, state.u2)
        rows = []
        for x, tag, uk, vk in zip(m.nodes, m.region_tag, u, v):
            rows.append((x, tag, uk if tag == OMEGA1 else "", uk if tag == OMEGA2 else "", vk))
        self.csv(name, ("x", "region", "u1", "u2", "v"), rows)


def _state_summary(state: StateTriple) -> dict:
    return {"min_u1": float(state.u1.min()), "max_u1": float(state.u1.max()),
            "min_u2": float(state.u2.min()), "max_u2": float(state.u2.max()),
            "min_v": float(state.v.min()), "max_v": float(state.v.max()),
            "residual": float(state.residual), "iterations": int(state.iterations)}


def _bc(region, kind, robin_g, value=0.0):
    if kind == "neumann":
        return neumann_bc(region)
    if kind == "robin_sigma":
        return robin_sigma_bc(region, robin_g)
    return dirichlet_sigma_bc(region, value)


def _span(s):
    return [float(x) for x in np.linspace(s.start, s.stop, s.num)]


# ---------------------------------------------------------------------------
# commands

def cmd_eig(run: Run):
    c = run.cfg.commands.eig
    m, d = run.mesh, run.params.d
    if c.problem == "interface":
        op = assemble_interface(m, d, c.c1, c.c2)
        r = principal(op)
        rows = [(x, tag, phi) for x, tag, phi in zip(m.nodes, m.region_tag, r.eigenfunction)]
    else:
        op = assemble_scalar(m, c.region, d, c.c, _bc(c.region, c.bc, c.robin_g))
        r = principal(op, m)
        nodes = m.region_nodes(c.region)
        tag = c.region
        rows = [(x, tag, phi) for x, phi in zip(nodes, r.eigenfunction)]
    run.dump("matrix.txt", op)
    run.csv("eigenfunction.csv", ("x", "region", "phi"), rows)
    run.summary = {"value": r.value, "residual": r.residual, "iterations": r.iterations}


def cmd_logistic(run: Run):
    c = run.cfg.commands.logistic
    p, m = run.params, run.mesh
    mu = p.mu if c.mu is None else c.mu
    bc = _bc(c.region, c.bc, c.robin_g, c.dirichlet_value)
    run.dump("matrix.txt", assemble_scalar(m, c.region, p.d, c.c, bc))
    try:
        sol = solve_logistic_scalar(m, c.region, mu, c.c, p.beta, bc, d=p.d)
    except NoPositiveSolution as exc:
        run.summary = {"status": "no_positive_solution", "reason": str(exc)}
        return
    except Indeterminate as exc:
        run.summary = {"status": "indeterminate", "reason": str(exc)}
        return
    run.csv("logistic.csv", ("x", "region", "u"),
            [(x, c.region, u) for x, u in zip(m.region_nodes(c.region), sol.values)])
    run.summary = {"status": "positive", "min": float(sol.values.min()), "max": float(sol.values.max()),
                   "residual": sol.residual, "iterations": sol.iterations}


def cmd_semitrivial(run: Run):
    p, m, model = run.params, run.mesh, run.model
    run.dump("matrix.txt", assemble_interface(m, p.d, 0.0, 0.0))
    lam0 = model.lam(-p.lambda1, -p.lambda2)
    try:
        pair = model.pair(p.lambda1, p.lambda2)
    except NoPositiveSolution as exc:
        run.summary = {"status": "no_positive_solution", "lambda1_of_minus_rates": lam0, "reason": str(exc)}
        return
    except Indeterminate as exc:
        run.summary = {"status": "indeterminate", "lambda1_of_minus_rates": lam0, "reason": str(exc)}
        return
    theta = pair.joined(m)
    run.csv("semitrivial.csv", ("x", "region", "theta"), list(zip(m.nodes, m.region_tag, theta)))
    stab = semitrivial_stability(m, pair, p.lambda1, p.lambda2, p.alpha1, p.alpha2, p.d)
    run.summary = {"status": "positive", "lambda1_of_minus_rates": lam0,
                   "max_theta1": float(pair.theta1.max()), "max_theta2": float(pair.theta2.max()),
                   "stability_eigenvalue": stab, "residual": pair.residual, "iterations": pair.iterations}


def _dump_system(run: Run):
    if run.dump_matrix:
        run.dump("matrix_interface.txt", assemble_interface(run.mesh, run.params.d, 0.0, 0.0))
        run.dump("matrix_omega.txt", assemble_scalar(run.mesh, "Omega", run.params.d, 0.0, neumann_bc("Omega")))


def cmd_coexist(run: Run):
    _dump_system(run)
    try:
        state = solve_coexistence(run.params, run.mesh, tol=run.cfg.commands.coexist.tol)
    except NotFound as exc:
        run.summary = {"status": "not_found", "evidence": exc.evidence, "reason": str(exc)}
        if exc.evidence == "newton":
            raise
        return
    run.state_csv("state.csv", state)
    run.summary = {"status": "coexistence", **_state_summary(state),
                   "within_bounds": state.within_bounds(run.params)}


def cmd_evolve(run: Run):
    c = run.cfg.commands.evolve
    p, m = run.params, run.mesh
    _dump_system(run)
    if c.init == "positive":
        init = positive_initial_state(p, m)
    else:
        pair = run.model.pair(p.lambda1, p.lambda2)
        init = StateTriple(pair.theta1, pair.theta2, np.full(m.n_omega, 0.01 * max(p.mu, 1.0)))
    state = evolve_parabolic(p, m, init, t_end=c.t_end, dt=c.dt)
    run.state_csv("state.csv", state)
    run.summary = {"t_end": c.t_end, "coexistence": state.coexistence, **_state_summary(state)}


def _curve_rows(samples):
    return [(s.abscissa, s.value, s.flag.value) for s in samples]


def cmd_curve_h(run: Run):
    samples = [run.model.curve_H(x) for x in _span(run.cfg.commands.curve_h)]
    run.csv("curve_h.csv", ("nu2", "H", "flag"), _curve_rows(samples))
    run.summary = {"sigma1": run.model.sigmas[0], "sigma2": run.model.sigmas[1],
                   "samples": len(samples), "ok": sum(s.ok for s in samples)}


def cmd_curve_g(run: Run):
    samples = [run.model.curve_g(x) for x in _span(run.cfg.commands.curve_g)]
    run.csv("curve_g.csv", ("lambda1", "g", "flag"), _curve_rows(samples))
    g_curve = [run.model.curve_G(mu) for mu in _span(run.cfg.commands.curve_ghat)]
    run.csv("curve_G.csv", ("mu", "G", "flag"), _curve_rows(g_curve))
    run.summary = {"samples": len(samples), "ok": sum(s.ok for s in samples)}


def cmd_curve_ghat(run: Run):
    rows = []
    for mu in _span(run.cfg.commands.curve_ghat):
        try:
            s0, gh = run.model.curve_sigma0_and_Ghat(mu)
            rows.append((mu, s0, gh, Flag.OK.value))
        except (MembranaError, ValueError) as exc:
            flag = Flag.INDETERMINATE if isinstance(exc, NotFound) else Flag.OUT_OF_DOMAIN
            rows.append((mu, float("nan"), float("nan"), flag.value))
    run.csv("curve_ghat.csv", ("mu", "sigma0", "Ghat", "flag"), rows)
    run.summary = {"samples": len(rows), "ok": sum(r[3] == Flag.OK.value for r in rows)}


def cmd_mu0(run: Run):
    p = run.params
    run.summary = {"lambda1": p.lambda1, "lambda2": p.lambda2,
                   "mu0": run.model.compute_mu0(p.lambda1, p.lambda2)}


def cmd_mu1(run: Run):
    p = run.params
    run.summary = {"lambda1": p.lambda1, "lambda2": p.lambda2,
                   "mu1": run.model.compute_mu1(p.lambda1, p.lambda2)}


def cmd_mu_star(run: Run):
    c = run.cfg.commands.mu_star
    p = run.params
    br = estimate_mu_star(run.model, p.lambda1, p.lambda2, c.window, c.n_scan, c.rtol)
    run.summary = {"lambda1": p.lambda1, "lambda2": p.lambda2, "lower": br.lower, "upper": br.upper,
                   "constructive_bound": br.constructive}


def cmd_region_map(run: Run):
    c = run.cfg.commands.region_map
    if c is None:
        raise ConfigError("region-map needs a commands.region_map block")
    grid = GridSpec(c.x_range, c.mu_range, c.nx, c.nmu, c.equal)
    rmap = region_map(run.params, grid, run.cfg.geometry.n_per_unit, c.confirm, run.threads, c.band)
    curves = region_curves(run.model, grid)
    markers = []
    lam2 = run.params.lambda2
    if not c.equal and lam2 < run.model.sigmas[1]:
        h = run.model.H(lam2)
        if c.x_range[0] <= h <= c.x_range[1] and c.mu_range[0] <= 0 <= c.mu_range[1]:
            markers.append((h, 0.0, "G(0) = H(lambda2)"))
    xname = "lambda" if c.equal else "lambda1"
    run.csv("region_map.csv", (xname, "mu", "class", "confirmed"),
            [(x, mu, cls.value, mark.value) for x, mu, cls, mark in rmap.cells()])
    for name, pts in sorted(curves.items()):
        run.csv(f"curve_{name}_overlay.csv", (xname, "mu"), pts)
    title = "equal growth rates" if c.equal else f"lambda2 = {lam2:g}"
    run.text("region_map.svg", render_region_svg(rmap, curves, markers, title))
    counts: dict = {}
    for _, _, cls, mark in rmap.cells():
        key = f"{cls.value}/{mark.value}"
        counts[key] = counts.get(key, 0) + 1
    run.summary = {"cells": grid.nx * grid.nmu, "counts": dict(sorted(counts.items())),
                   "markers": [list(mk) for mk in markers]}


def cmd_branch(run: Run):
    c = run.cfg.commands.branch
    _dump_system(run)
    br = trace_branch(run.model, step=StepSpec(c.initial, c.min_step, c.max_step, c.max_points))
    rows = [(pt.mu, pt.arclength, pt.state.u1.min(), pt.state.u2.min(), pt.state.v.min(), pt.state.residual)
            for pt in br.points]
    run.csv("branch.csv", ("mu", "arclength", "min_u1", "min_u2", "min_v", "residual"), rows)
    mus = [pt.mu for pt in br.points]
    run.summary = {"mu0": br.mu0, "mu1": br.mu1, "points": len(br.points), "reason": br.reason,
                   "mu_min": min(mus), "mu_max": max(mus)}


def cmd_limit_system(run: Run):
    c = run.cfg.commands.limit_system
    p, m = run.params, run.mesh
    lim, probes = limit_convergence(run.model, c.lambda1_list, p.mu, c.m_value)
    idx = m.to_omega[m.idx2]
    run.csv("limit_system.csv", ("x", "region", "u2", "v"),
            [(m.x[k], OMEGA2, u, v) for k, u, v in zip(idx, lim.u2, lim.v2)])
    run.csv("limit_convergence.csv", ("lambda1", "min_u1", "sup_distance_v", "sup_v_omega1"),
            [(q.lambda1, q.min_u1, q.sup_distance_v, q.sup_v_omega1) for q in probes])
    large = approximate_large_solution(m, p.lambda2, p.alpha2, run.cfg.commands.large.m_list, p.d)
    hist = np.array(large.history)
    run.csv("large_solution.csv", ("x", *[f"M={mv:g}" for mv in large.m_list]),
            [(m.x[k], *hist[:, i]) for i, k in enumerate(idx)])
    run.summary = {"mu": p.mu, "m_value": c.m_value, "limit_residual": lim.residual,
                   "max_limit_v": float(lim.v2.max()),
                   "probes": [vars(q) for q in probes],
                   "large_solution_far_field_increment": float(np.min(large.increments))}


def cmd_oracle(run: Run):
    c = run.cfg.commands.oracle

    def end(kind, g):
        return EndCondition(kind, g if kind == "robin" else 0.0)

    spec = TranscendentalSpec(c.length, end(c.left, c.gamma_left), end(c.right, c.gamma_right))
    run.summary = {"value": interval_eigen_oracle(spec) * run.params.d, "length": c.length,
                   "left": c.left, "right": c.right}


COMMANDS = {
    "eig": cmd_eig, "logistic": cmd_logistic, "semitrivial": cmd_semitrivial, "coexist": cmd_coexist,
    "evolve": cmd_evolve, "curve-h": cmd_curve_h, "curve-g": cmd_curve_g, "curve-ghat": cmd_curve_ghat,
    "mu0": cmd_mu0, "mu1": cmd_mu1, "mu-star": cmd_mu_star, "region-map": cmd_region_map,
    "branch": cmd_branch, "limit-system": cmd_limit_system, "oracle": cmd_oracle,
}


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the config's output)")
    common.add_argument("--threads", type=int, help="worker processes (default: MEMBRANA_THREADS or 1)")
    common.add_argument("--dump-matrix", action="store_true", help="write assembled operators as 'row col value' text")
    parser = argparse.ArgumentParser(prog="membrana", description="Membrane-coupled competition model solvers.")
    parser.add_argument("--version", action="version", version=f"membrana {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(command: str, config_path: str, out: str | None = None, threads: int | None = None,
        dump_matrix: bool = False) -> int:
    """Execute one command; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        threads = resolve_threads(threads)
        out_dir = Path(out or cfg.output or f"out/{command}")
        ctx = Run(command, cfg, out_dir, threads, dump_matrix)
    except (MembranaError, ValueError) as exc:
        print(f"membrana: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    code = EXIT_OK
    try:
        COMMANDS[command](ctx)
    except (SolverFailure, NotFound) as exc:
        print(f"membrana: solver failure: {exc}", file=sys.stderr)
        ctx.summary.setdefault("status", "solver_failure")
        ctx.summary.setdefault("reason", str(exc))
        code = EXIT_SOLVER
    except Degenerate as exc:
        print(f"membrana: {exc}", file=sys.stderr)
        ctx.summary = {"status": "degenerate", "reason": str(exc)}
        code = EXIT_INVALID
    except (MembranaError, ValueError) as exc:
        print(f"membrana: invalid input: {exc}", file=sys.stderr)
        ctx.summary = {"status": "invalid", "reason": str(exc)}
        code = EXIT_INVALID
    stem = command.replace("-", "_")
    ctx.json(f"{stem}.json", ctx.summary)
    manifest = {"command": command, "version": __version__, "exit_code": code,
                "numpy": np.__version__, "config": cfg.resolved(), "threads": threads,
                "dump_matrix": dump_matrix, "outputs": sorted(ctx.files)}
    export_json(out_dir / "manifest.json", manifest)
    print(json.dumps({"command": command, "exit_code": code, "out": str(out_dir), **ctx.summary},
                     default=str, sort_keys=True))
    return code


def main(argv=None) -> int:
    # argparse reports usage errors with exit status 2, which matches EXIT_INVALID
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.threads, args.dump_matrix)


if __name__ == "__main__":
    sys.exit(main())
