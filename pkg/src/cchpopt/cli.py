"""Command-line entry point: ``optimize``, ``compare`` and ``reference`` subcommands.

Exit statuses: 0 success, 2 bad flags or names, 3 scenario parse error,
1 any other failure. Failures print one line on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .cchp import CaseMode, CCHPProblem, change_rates, reference_objectives
from .evaluation import ALGORITHMS, batch_run
from .moea import AlgorithmParams, best_compromise_index, fast_nondominated_sort
from .scenario import BUILTIN_NAMES, Scenario, ScenarioError, builtin_scenario, load_scenario

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_SCENARIO = 0, 1, 2, 3

OBJECTIVE_COLUMNS = ("cost_yuan", "pec_kwh", "cde_g")


class UsageError(Exception):
    """Bad flag value detected after argument parsing."""


# --------------------------------------------------------------------------
# output helpers


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def front_csv(F: np.ndarray, X: np.ndarray) -> str:
    """Objective and decision columns at six decimals, enough to re-evaluate to 1e-6."""
    header = [*OBJECTIVE_COLUMNS, *(f"x{k}" for k in range(1, X.shape[1] + 1))]
    rows = [[f"{v:.6f}" for v in (*f, *x)] for f, x in zip(F, X)]
    return _csv_text(header, rows)


def _synthetic_note(s: Scenario) -> str:
    return " [synthetic load profile]" if s.synthetic else ""


def dispatch_text(s: Scenario, x: np.ndarray, f: np.ndarray) -> str:
    lines = [f"Energy dispatch of the best compromise solution: {s.name}{_synthetic_note(s)}"]
    lines.append(f"{'period':>6} {'X1 grid (kWh)':>14} {'X2 PGU fuel (kWh)':>18} {'X3 boiler fuel (kWh)':>21}")
    for t, (x1, x2, x3) in enumerate(x.reshape(-1, 3)):
        lines.append(f"{t:>6d} {x1:>14.1f} {x2:>18.1f} {x3:>21.1f}")
    lines.append(f"cost (Yuan) {f[0]:.2f}  PEC (kWh) {f[1]:.1f}  CDE (g) {f[2]:.0f}")
    return "\n".join(lines) + "\n"


def rates_text(s: Scenario, ref: np.ndarray, f: np.ndarray, rates: np.ndarray) -> str:
    lines = [f"Change rates of the best compromise solution vs the reference system: {s.name}{_synthetic_note(s)}"]
    lines.append(f"{'objective':<12} {'reference':>14} {'optimized':>14} {'reduction (%)':>14}")
    for label, r, v, rate, fmt in zip(("cost (Yuan)", "PEC (kWh)", "CDE (g)"), ref, f, rates, (".2f", ".1f", ".0f")):
        lines.append(f"{label:<12} {r:>14{fmt}} {v:>14{fmt}} {rate:>14.2f}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# argument handling


def _env_seed() -> int:
    raw = os.environ.get("CCHP_SEED")
    if raw is None or raw.strip() == "":
        return 0
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"CCHP_SEED: {exc}") from None


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {value}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", type=Path, help="scenario file (INI)")
    src.add_argument("--builtin", help=f"builtin scenario: {', '.join(BUILTIN_NAMES)}")
    p.add_argument("--case", choices=[m.value for m in CaseMode], help="override the scenario's case mode")


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=None, help="master seed (default: $CCHP_SEED or 0)")
    p.add_argument("--pop", type=_positive, default=100, help="population size (default 100)")
    p.add_argument("--gens", type=_positive, default=250, help="generations (default 250)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    p.add_argument("--plot", action="store_true", help="also render PNG figures into the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cchpopt", description="Three-objective CCHP dispatch optimizer.")
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="run one optimization and export the front")
    _add_scenario_flags(opt)
    _add_engine_flags(opt)
    opt.add_argument("--algo", default="bcs-gde", help="bcs-gde or nsga2 (default bcs-gde)")
    opt.add_argument("--bcs-normalize", action="store_true", help="min-max normalize before picking the best compromise")

    cmp_ = sub.add_parser("compare", help="repeat runs of several algorithms and compare indicators")
    _add_scenario_flags(cmp_)
    _add_engine_flags(cmp_)
    cmp_.add_argument("--algorithms", default="bcs-gde,nsga2", help="comma-separated names; the first is the baseline")
    cmp_.add_argument("--runs", type=_positive, default=20, help="runs per algorithm (default 20)")
    cmp_.add_argument("--jobs", type=_positive, default=1, help="worker processes (default 1)")

    ref = sub.add_parser("reference", help="objectives of the supply without CCHP")
    _add_scenario_flags(ref)
    ref.add_argument("--csv", type=Path, help="also write the values to this CSV file")
    return parser


def _scenario(args) -> Scenario:
    if args.builtin is not None:
        try:
            s = builtin_scenario(args.builtin)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        s = load_scenario(args.scenario)
    if args.case is not None:
        s = s.with_case(CaseMode.parse(args.case))
    return s


def _params(args) -> AlgorithmParams:
    seed = args.seed if args.seed is not None else _env_seed()
    try:
        return AlgorithmParams(population_size=args.pop, max_generations=args.gens, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_algorithm(name: str) -> None:
    if name not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {name!r}; valid names: {', '.join(ALGORITHMS)}")


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


# --------------------------------------------------------------------------
# commands


def cmd_optimize(args) -> int:
    _check_algorithm(args.algo)
    s = _scenario(args)
    params = _params(args)
    problem = CCHPProblem(s)
    pop = ALGORITHMS[args.algo](problem, params)
    out = _out_dir(args.out)

    feasible = [ind for ind in pop if ind.is_feasible(problem.feasibility_tol)]
    if feasible:
        F = np.array([ind.objectives for ind in feasible])
        X = np.array([ind.decision for ind in feasible])
        # unique rows come back sorted by cost, then PEC, then CDE
        _, first = np.unique(F, axis=0, return_index=True)
        F, X = F[first], X[first]
        keep = fast_nondominated_sort(F)[0]
        F, X = F[keep], X[keep]
    else:
        F = np.empty((0, 3))
        X = np.empty((0, problem.n_var))
    write_atomic(out / "front.csv", front_csv(F, X))
    if not feasible:
        raise RuntimeError("no feasible solution in the final population")

    b = best_compromise_index(F, normalize=args.bcs_normalize)
    write_atomic(out / "best.csv", front_csv(F[b : b + 1], X[b : b + 1]))
    ref = reference_objectives(s)
    rates = change_rates(ref, F[b])
    write_atomic(out / "dispatch.txt", dispatch_text(s, X[b], F[b]))
    write_atomic(out / "rates.txt", rates_text(s, ref, F[b], rates))
    if args.plot:
        from .plotting import plot_front, plot_rates

        plot_front(F, F[b], out / "front.png", title=s.name)
        plot_rates(rates, out / "rates.png", title=s.name)
    sys.stdout.write(rates_text(s, ref, F[b], rates))
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [n.strip() for n in args.algorithms.split(",") if n.strip()]
    if not names:
        raise UsageError("--algorithms needs at least one name")
    for name in names:
        _check_algorithm(name)
    s = _scenario(args)
    params = _params(args)
    report = batch_run(names, CCHPProblem(s), args.runs, params, workers=args.jobs)
    out = _out_dir(args.out)
    write_atomic(out / "indicators.csv", report.indicators_csv())
    write_atomic(out / "wilcoxon.csv", report.wilcoxon_csv())
    header = f"Scenario: {s.name}{_synthetic_note(s)}, {args.runs} runs, seeds {params.seed}..{params.seed + args.runs - 1}\n"
    text = header + report.to_text()
    write_atomic(out / "summary.txt", text)
    if args.plot:
        from .plotting import plot_indicators

        plot_indicators({"HV": report.hv, "spread": report.spread}, out / "indicators.png", title=s.name)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_reference(args) -> int:
    s = _scenario(args)
    cost, pec, cde = reference_objectives(s)
    sys.stdout.write(f"Reference system (grid electricity, gas-fired heat): {s.name}{_synthetic_note(s)}\n")
    sys.stdout.write(f"{'cost (Yuan)':>14} {'PEC (kWh)':>14} {'CDE (g)':>14}\n")
    sys.stdout.write(f"{cost:>14.2f} {pec:>14.1f} {cde:>14.0f}\n")
    if args.csv is not None:
        if args.csv.parent != Path(""):
            args.csv.parent.mkdir(parents=True, exist_ok=True)
        write_atomic(args.csv, _csv_text(OBJECTIVE_COLUMNS, [[f"{cost:.2f}", f"{pec:.1f}", f"{cde:.0f}"]]))
    return EXIT_OK


COMMANDS = {"optimize": cmd_optimize, "compare": cmd_compare, "reference": cmd_reference}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cchpopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"cchpopt: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except Exception as exc:  # noqa: BLE001
        message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"cchpopt: failure: {message}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
