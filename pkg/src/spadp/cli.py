"""Command line front end: ``spadp {oracle,learn,simulate,optimal,compare}``.

Exit statuses: 0 ok, 2 config error, 3 insufficient data, 4 non-convergence,
5 instability, 6 unreachable boundary. Failures also print one
machine-readable ``error kind=... exit=...`` line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bvp_oracle, composite, learner, riccati
from .config import RunConfig, config_from_dict, load_config
from .errors import ConfigError, RankError, SpadpError
from .odeint import Trajectory
from .systems import INITIAL, MASS_PUBLISHED, TERMINAL, freeze

COMPARE_COLUMNS = [
    "epsilon",
    "sup_state_err_learned",
    "sup_state_err_oracle_gains",
    "sup_control_err",
    "cost_gap",
    "t_c",
    "sup_control_err_oracle_gains",
    "cost_gap_oracle_gains",
    "t_c_oracle_gains",
    "status",
]


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def write_csv(path: Path, header: List[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def trajectory_rows(traj: Trajectory):
    header = ["tau"] + [f"x_{i + 1}" for i in range(traj.n)] + [f"u_{j + 1}" for j in range(traj.m)]
    header.append("running_cost")
    rows = [
        [t, *x, *u, c]
        for t, x, u, c in zip(traj.times, traj.states, traj.controls, traj.running_cost)
    ]
    return header, rows


def trace_rows(trace, n: int, m: int, negate_p: bool = False):
    header = ["k"]
    header += [f"P_{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
    header += [f"K_{i + 1}_{j + 1}" for i in range(m) for j in range(n)]
    header.append("step_change")
    rows = []
    for it in trace:
        P = -it.P if negate_p else it.P
        rows.append([it.k, *P.ravel(), *it.K.ravel(), it.step_change])
    return header, rows


def eps_tag(eps: float) -> str:
    return f"{eps:g}"


# -- workflow -----------------------------------------------------------------


def oracle_solutions(cfg: RunConfig, plant):
    oc = cfg.oracle
    return riccati.boundary_gains(plant, oc.k0_a, oc.k0_b, oc.tol, oc.max_iter)


def learn_both(cfg: RunConfig, plant, spec):
    """Learn ``(initial, terminal)`` gains model-free; the plant is only simulated."""
    lc = cfg.learner
    ex = lc.excitation
    u0 = learner.make_excitation(lc.seed, ex.count, ex.amplitude, ex.freq_range, m=plant.m)
    results = []
    for orientation, k_init, x_start in (
        (INITIAL, lc.k_init_a, spec.x0),
        (TERMINAL, lc.k_init_b, spec.xT),
    ):
        prob = freeze(plant, orientation)
        log = None
        if lc.data_source == "ltv":
            log = learner.collect_ltv(
                plant, orientation, spec.epsilon, u0, lc.boundary_fraction, lc.dt,
                k_behavior=learner._as_gain(k_init, plant.m, plant.n), x0=x_start, h=lc.step,
            )
        result, _ = learner.learn_gain(
            prob, u0, lc.dt, lc.horizon, k_init, lc.tol, lc.max_iter,
            x0=x_start, h=lc.step, reflect=lc.reflect, log=log,
        )
        results.append(result)
    return results[0], results[1]


def compare_row(cfg: RunConfig, eps: float, learned=None):
    plant, spec = cfg.build_system(eps)
    sc = cfg.simulation
    opt = bvp_oracle.solve_bvp(plant, spec, sc.step)
    sol_a, sol_b = oracle_solutions(cfg, plant)
    if learned is None:
        learned = learn_both(cfg, plant, spec)
    la, lb = learned

    def run(Ka, Kb):
        ctrl = composite.build_controller(plant, spec, Ka, Kb, sc.mode, sc.step)
        traj = composite.simulate_composite(plant, spec, ctrl, sc.step)
        return traj, ctrl.t_c, composite.approx_error(traj, opt.trajectory)

    traj_l, tc_l, (sx_l, su_l, gap_l) = run(la.K, lb.K)
    traj_o, tc_o, (sx_o, su_o, gap_o) = run(sol_a.K, sol_b.K)
    row = [eps, sx_l, sx_o, su_l, gap_l, tc_l, su_o, gap_o, tc_o, "ok"]
    return row, {"optimal": opt.trajectory, "learned": traj_l, "oracle_gains": traj_o}


# -- subcommands --------------------------------------------------------------


def mass_note() -> str:
    return (
        "note: published reference values are P_a(0) = {P_a(0)}, P_b(1) = {P_b(1)} and learned "
        "K_a = {K_a learned}, K_b = {K_b learned}; -2.414 is the negative root at A = -1 (tau = 0), "
        "the anti-stabilizing root at A(1) = -1.2 is -1.2 - sqrt(2.44)".format(**MASS_PUBLISHED)
    )


def cmd_oracle(cfg: RunConfig, out: Optional[Path]) -> int:
    eps = cfg.epsilons[0]
    plant, _ = cfg.build_system(eps)
    sol_a, sol_b = oracle_solutions(cfg, plant)
    lines = [
        f"system: {plant.name}",
        f"P_a(0): {_mat(sol_a.P)}",
        f"K_a: {_mat(sol_a.K)}",
        f"ARE residual (tau=0): {sol_a.residual:.3e}",
        f"P_b(1): {_mat(sol_b.P)}",
        f"K_b: {_mat(sol_b.K)}",
        f"ARE residual (tau=1): {sol_b.residual:.3e}",
    ]
    if plant.name == "mass":
        lines.append(mass_note())
    text = "\n".join(lines) + "\n"
    sys_out = sys_stdout()
    sys_out.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.txt").write_text(text)
    return 0


def cmd_learn(cfg: RunConfig, out: Optional[Path]) -> int:
    eps = cfg.epsilons[0]
    plant, spec = cfg.build_system(eps)
    la, lb = learn_both(cfg, plant, spec)
    sol_a, sol_b = oracle_solutions(cfg, plant)
    lines = [
        f"K_a learned: {_mat(la.K)} (oracle {_mat(sol_a.K)}, {la.iterations} iterations)",
        f"K_b learned: {_mat(lb.K)} (oracle {_mat(sol_b.K)}, {lb.iterations} iterations)",
        f"P_a(0) learned: {_mat(la.P)}",
        f"P_b(1) learned: {_mat(lb.P)}",
    ]
    sys_stdout().write("\n".join(lines) + "\n")
    if out is not None:
        write_csv(out / "trace_initial.csv", *trace_rows(la.trace, plant.n, plant.m))
        write_csv(out / "trace_terminal.csv", *trace_rows(lb.trace, plant.n, plant.m, negate_p=True))
    return 0


def cmd_simulate(cfg: RunConfig, out: Optional[Path]) -> int:
    learned = None
    for eps in cfg.epsilons:
        plant, spec = cfg.build_system(eps)
        if cfg.simulation.gains == "oracle":
            sol_a, sol_b = oracle_solutions(cfg, plant)
            Ka, Kb = sol_a.K, sol_b.K
        else:
            if learned is None or cfg.learner.data_source == "ltv":
                learned = learn_both(cfg, plant, spec)
            Ka, Kb = learned[0].K, learned[1].K
        ctrl = composite.build_controller(plant, spec, Ka, Kb, cfg.simulation.mode, cfg.simulation.step)
        traj = composite.simulate_composite(plant, spec, ctrl, cfg.simulation.step)
        sys_stdout().write(
            f"epsilon={eps_tag(eps)} t_c={ctrl.t_c:.6f} J={traj.cost:.6f} "
            f"x(1)={_mat(traj.states[-1])}\n"
        )
        if out is not None:
            write_csv(out / f"composite_eps{eps_tag(eps)}.csv", *trajectory_rows(traj))
    return 0


def cmd_optimal(cfg: RunConfig, out: Optional[Path]) -> int:
    for eps in cfg.epsilons:
        plant, spec = cfg.build_system(eps)
        sol = bvp_oracle.solve_bvp(plant, spec, cfg.simulation.step)
        res = bvp_oracle.optimality_residual(sol, plant)
        sys_stdout().write(
            f"epsilon={eps_tag(eps)} J={sol.cost:.8f} p0={_mat(sol.p0)} "
            f"boundary_residual={sol.boundary_residual:.2e} costate_res={res[0]:.2e} "
            f"stationarity_res={res[1]:.2e} cond(Phi12)={sol.condition:.2e}\n"
        )
        if out is not None:
            write_csv(out / f"optimal_eps{eps_tag(eps)}.csv", *trajectory_rows(sol.trajectory))
    return 0


def cmd_compare(cfg: RunConfig, out: Optional[Path]) -> int:
    rows = []
    status = 0
    learned = None
    for eps in cfg.epsilons:
        try:
            if cfg.learner.data_source == "ltv" or learned is None:
                plant, spec = cfg.build_system(eps)
                learned = learn_both(cfg, plant, spec)
            row, trajs = compare_row(cfg, eps, learned)
        except SpadpError as exc:
            report_error(exc)
            status = status or exc.exit_code
            rows.append([eps] + [math.nan] * (len(COMPARE_COLUMNS) - 2) + [exc.kind])
            continue
        rows.append(row)
        if out is not None:
            for name, traj in trajs.items():
                write_csv(out / f"{name}_eps{eps_tag(eps)}.csv", *trajectory_rows(traj))
    buf_rows = rows
    if out is not None:
        write_csv(out / "compare.csv", COMPARE_COLUMNS, buf_rows)
    if cfg.system.get("builtin") == "mass":
        # the CSV goes to stdout, so the reference note goes to stderr
        print(mass_note(), file=sys.stderr)
        if out is not None:
            (out / "compare_notes.txt").write_text(mass_note() + "\n")
    stream = sys_stdout()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    for row in buf_rows:
        writer.writerow([fmt(v) for v in row])
    return status


COMMANDS = {
    "oracle": cmd_oracle,
    "learn": cmd_learn,
    "simulate": cmd_simulate,
    "optimal": cmd_optimal,
    "compare": cmd_compare,
}


def _mat(a) -> str:
    a = np.asarray(a, dtype=float)
    if a.size == 1:
        return f"{a.item():.6f}"
    return np.array2string(a, precision=6, separator=", ")


def sys_stdout():
    return sys.stdout


def report_error(exc: SpadpError) -> None:
    parts = [f"error kind={exc.kind}", f"exit={exc.exit_code}"]
    if isinstance(exc, RankError):
        parts += [f"rank={exc.rank}", f"required_rank={exc.required}"]
    time = getattr(exc, "time", None)
    if time is not None:
        parts.append(f"time={time:.6g}")
    message = str(exc).replace('"', "'")
    parts.append(f'message="{message}"')
    print(" ".join(parts), file=sys.stderr)


def parse_epsilons(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"cannot parse epsilon list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spadp", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML run configuration (defaults: builtin mass example)")
    parser.add_argument("--out", help="output directory for CSV / report files")
    parser.add_argument("--seed", type=int, help="excitation seed (overrides config)")
    parser.add_argument("--epsilon", help="comma-separated epsilon list (overrides config)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else config_from_dict({})
        if args.seed is not None:
            cfg.learner.seed = args.seed
        if args.epsilon is not None:
            cfg.epsilons = parse_epsilons(args.epsilon)
            cfg.validate()
        out_dir = args.out or cfg.output
        out = Path(out_dir) if out_dir else None
        return COMMANDS[args.command](cfg, out)
    except SpadpError as exc:
        report_error(exc)
        return exc.exit_code
    except ValueError as exc:
        report_error(ConfigError(str(exc)))
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
