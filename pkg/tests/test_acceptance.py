"""Acceptance suite: one recorded verdict per criterion, summarized after the run.

Every check runs at the tolerance the criterion states. Checks that fail are
left failing; the reasons are analysed in the project's decisions ledger.
"""

import itertools

import numpy as np
import pytest

from cchpopt import cli
from cchpopt.cchp import CCHPProblem, DemandProfile, change_rates, objectives, reference_objectives
from cchpopt.evaluation import batch_run, feasible_front, hypervolume, nondominated, wilcoxon_signed_rank
from cchpopt.moea import AlgorithmParams, best_compromise_index, evolve, fast_nondominated_sort
from cchpopt.scenario import BUILTIN_NAMES, Scenario, builtin_scenario

from conftest import brute_force_fronts, enumerate_wilcoxon, hand_objectives, monte_carlo_hv, record_criterion

TABLE6 = AlgorithmParams(population_size=100, max_generations=250, F=0.5, CR=0.5)


def _single(e_d=0.0):
    return Scenario("published-row", DemandProfile((e_d,), (0.0,), (0.0,)), flat_electricity=0.65)


# --- 1. cost identity ----------------------------------------------------------

PUBLISHED_COSTS = [
    # published case, method, (X1, X2, X3), published cost
    ("load 4166", "OMOPSO", (3392.0, 2077.0, 3.5), 2663.0),
    ("load 4166", "NSGA-II", (3397.0, 2063.0, 0.0), 2662.0),
    ("load 4166", "SPEA2", (3684.0, 1350.0, 68.0), 2707.0),
    ("load 4166", "BCS-GDE", (3402.0, 2051.0, 0.0), 2662.0),
    ("load 3070", "OMOPSO", (2144.0, 2483.0, 1.0), 1940.0),
    ("load 3070", "NSGA-II", (2495.0, 1548.0, 0.0), 1962.0),
    ("load 3070", "SPEA2", (2440.0, 1823.0, 61.0), 2001.0),
    ("load 3070", "BCS-GDE", (2859.0, 575.0, 0.0), 1961.0),
]


@pytest.mark.parametrize("case,method,x,published", PUBLISHED_COSTS, ids=lambda v: str(v))
def test_criterion_1_cost_identity(case, method, x, published):
    cost = objectives(np.array(x), _single())[0]
    ok = abs(cost - published) <= 1.0
    record_criterion(1, "published costs reproduce within 1 Yuan",
                     ok, f"{case} {method}: computed {cost:.2f}, published {published:.0f}")
    assert ok


# --- 2. electricity balance ----------------------------------------------------

BALANCE_ROWS = [
    ("load 4166", "OMOPSO", (3392.0, 2077.0), 4166.0, "equal"),
    ("load 4166", "NSGA-II", (3397.0, 2063.0), 4166.0, "equal"),
    ("load 4166", "BCS-GDE", (3402.0, 2051.0), 4166.0, "equal"),
    ("load 4166", "SPEA2", (3684.0, 1350.0), 4166.0, "surplus"),
    ("load 3070", "OMOPSO", (2144.0, 2483.0), 3070.0, "equal"),
    ("load 3070", "NSGA-II", (2495.0, 1548.0), 3070.0, "equal"),
    ("load 3070", "BCS-GDE", (2859.0, 575.0), 3070.0, "equal"),
    ("load 3070", "SPEA2", (2440.0, 1823.0), 3070.0, "surplus"),
]


@pytest.mark.parametrize("case,method,x,load,kind", BALANCE_ROWS, ids=lambda v: str(v))
def test_criterion_2_electricity_balance(case, method, x, load, kind):
    supplied = x[0] + (x[1] - 11.43) / 2.67
    ok = abs(supplied - load) <= 1.0 if kind == "equal" else supplied - load >= 0.0
    record_criterion(2, "X1 + PGU output matches the published load",
                     ok, f"{case} {method}: supplied {supplied:.1f} vs load {load:.0f} ({kind})")
    assert ok


# --- 3. objective evaluation against a hand oracle -----------------------------


def test_criterion_3_objectives_match_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        s = builtin_scenario(BUILTIN_NAMES[k % len(BUILTIN_NAMES)])
        x = rng.uniform(s.lower, s.upper)
        ours = objectives(x, s)
        oracle = np.array(hand_objectives(x, s))
        worst = max(worst, float(np.max(np.abs(ours - oracle) / np.abs(oracle))))
    ok = worst <= 1e-9
    record_criterion(3, "objective evaluation matches the hand oracle on 20 vectors (1e-9 relative)",
                     ok, f"largest relative deviation {worst:.2e}")
    assert ok


# --- 4. sorting oracle ---------------------------------------------------------


def test_criterion_4_sort_matches_brute_force():
    rng = np.random.default_rng(44)
    mismatches = 0
    for k in range(200):
        n = int(rng.integers(1, 101))
        F = rng.integers(0, 6, (n, 3)).astype(float)
        G = None
        if k % 2:
            G = rng.integers(0, 3, (n, 2)).astype(float) * (rng.random((n, 1)) < 0.4)
        ours = [f.tolist() for f in fast_nondominated_sort(F, G)]
        mismatches += ours != brute_force_fronts(F, G)
    ok = mismatches == 0
    record_criterion(4, "fast non-dominated sort equals brute force on 200 populations",
                     ok, f"{mismatches} mismatching populations")
    assert ok


# --- 5. hypervolume ------------------------------------------------------------


def test_criterion_5_hypervolume():
    hand_a = hypervolume([[0.25, 0.25]], [1.0, 1.0])
    hand_b = hypervolume([[0.2, 0.2, 0.2], [0.1, 0.5, 0.5]], [1.0, 1.0, 1.0])
    hand_ok = abs(hand_a - 0.5625) <= 1e-12 and abs(hand_b - 0.537) <= 1e-3
    rng = np.random.default_rng(55)
    outside = []
    for k in range(50):
        front = nondominated(rng.random((int(rng.integers(1, 11)), 3)))
        est, se = monte_carlo_hv(front, np.ones(3), 10_000_000, rng)
        exact = hypervolume(front, np.ones(3))
        if abs(exact - est) > 3 * se:
            outside.append((k, (exact - est) / se))
    ok = hand_ok and not outside
    record_criterion(5, "exact HV equals Monte Carlo (1e7 samples, 3 SE) on 50 fronts; hand cases",
                     ok, f"hand cases {hand_a:.12f}, {hand_b:.12f}; fronts outside 3 SE: {outside}")
    assert ok


# --- 6. Wilcoxon ---------------------------------------------------------------


def test_criterion_6_wilcoxon_exact():
    rng = np.random.default_rng(66)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(1, 16))
        if k % 3 == 0:
            x, y = rng.integers(0, 5, n).astype(float), rng.integers(0, 5, n).astype(float)
        else:
            x, y = rng.normal(size=n), rng.normal(size=n)
        for alt in ("greater", "less", "two-sided"):
            worst = max(worst, abs(wilcoxon_signed_rank(x, y, alt) - enumerate_wilcoxon(x, y, alt)))
    five = wilcoxon_signed_rank([1.0, 2, 3, 4, 5], [0.0] * 5, "greater")
    ok = worst <= 1e-12 and five == 0.03125
    record_criterion(6, "Wilcoxon p-values equal full sign enumeration (n <= 15, 100 cases)",
                     ok, f"largest deviation {worst:.1e}; all-positive n=5 gives {five}")
    assert ok


# --- 7. comparative performance -------------------------------------------------

PEAKS = ("hotel-summer-peak", "office-winter-peak", "residential-transition-peak")


@pytest.mark.parametrize("name", PEAKS)
def test_criterion_7_bcs_beats_nsga2(name):
    report = batch_run(["bcs-gde", "nsga2"], CCHPProblem(builtin_scenario(name)), 20, TABLE6)
    sp_b, sp_n = np.median(report.spread["bcs-gde"]), np.median(report.spread["nsga2"])
    hv_b, hv_n = np.median(report.hv["bcs-gde"]), np.median(report.hv["nsga2"])
    p_hv, p_sp = report.pvalues[("bcs-gde", "nsga2")]
    ok = sp_b < sp_n and hv_b >= hv_n and p_sp < 0.05
    record_criterion(7, "BCS-GDE spread and HV medians beat NSGA-II on the peak scenarios (20 runs)", ok,
                     f"{name}: spread {sp_b:.4f} vs {sp_n:.4f} (p={p_sp:.2g}), HV {hv_b:.4f} vs {hv_n:.4f} (p={p_hv:.2g})")
    assert ok


# --- 8. reduction sanity ---------------------------------------------------------


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_criterion_8_best_compromise_reduces_all_objectives(name):
    s = builtin_scenario(name)
    problem = CCHPProblem(s)
    front = feasible_front(evolve(problem, TABLE6), problem.feasibility_tol)
    ref = reference_objectives(s)
    rates = change_rates(ref, front[best_compromise_index(front)])
    norm_rates = change_rates(ref, front[best_compromise_index(front, normalize=True)])
    ok = bool(np.all(rates > 0) and 10.0 <= rates[0] <= 90.0)
    record_criterion(8, "best compromise reduces cost, PEC and CDE; cost reduction in [10%, 90%]", ok,
                     f"{name}: reductions cost {rates[0]:.2f}%, PEC {rates[1]:.2f}%, CDE {rates[2]:.2f}% "
                     f"(normalized pick: {norm_rates[0]:.1f}%, {norm_rates[1]:.1f}%, {norm_rates[2]:.1f}%)")
    assert ok


# --- 9. determinism --------------------------------------------------------------


def test_criterion_9_cli_determinism(tmp_path, capsys):
    commands = [
        ["optimize", "--builtin", "hotel-summer-peak", "--seed", "5", "--gens", "60"],
        ["optimize", "--builtin", "office-winter-24h", "--case", "boiler-off", "--seed", "5", "--gens", "60"],
        ["compare", "--builtin", "residential-transition-peak", "--seed", "5", "--pop", "30", "--gens", "40", "--runs", "5"],
    ]
    differing = []
    for k, argv in enumerate(commands):
        outs = []
        for rep in range(2):
            out = tmp_path / f"cmd{k}-{rep}"
            assert cli.main([*argv, "--out", str(out)]) in (0, 1)
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        if outs[0] != outs[1] or not outs[0]:
            differing.append(" ".join(argv))
    for rep in range(2):
        cli.main(["reference", "--builtin", "hotel-summer-24h", "--csv", str(tmp_path / f"ref{rep}.csv")])
    if (tmp_path / "ref0.csv").read_bytes() != (tmp_path / "ref1.csv").read_bytes():
        differing.append("reference")
    capsys.readouterr()
    ok = not differing
    record_criterion(9, "repeated CLI invocations with one seed give byte-identical CSV bodies",
                     ok, f"{len(commands) + 1} commands repeated; differing: {differing or 'none'}")
    assert ok
