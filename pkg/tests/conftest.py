import itertools
import math

import numpy as np
import pytest

from cchpopt.moea import FunctionProblem


def schaffer(x):
    return (x[0] ** 2, (x[0] - 2.0) ** 2), (0.0,)


@pytest.fixture
def schaffer_problem():
    return FunctionProblem(schaffer, [-5.0], [5.0])


def brute_force_fronts(F, G=None, tol=0.0):
    """Peel constraint-dominance fronts with plain pairwise loops."""
    F = [tuple(r) for r in np.asarray(F, dtype=float)]
    n = len(F)
    if G is None:
        G = [(0.0,)] * n
    G = [tuple(0.0 if v <= tol else v for v in r) for r in np.asarray(G, dtype=float)]

    def dom(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    def cdom(i, j):
        fi = all(v == 0 for v in G[i])
        fj = all(v == 0 for v in G[j])
        if fi and fj:
            return dom(F[i], F[j])
        if fi != fj:
            return fi
        return dom(G[i], G[j])

    left = set(range(n))
    fronts = []
    while left:
        front = sorted(i for i in left if not any(cdom(j, i) for j in left if j != i))
        fronts.append(front)
        left -= set(front)
    return fronts


def monte_carlo_hv(front, ref, samples, rng, chunk=1_000_000):
    """Hypervolume estimate and its standard error from uniform sampling of the reference box."""
    front = np.asarray(front, dtype=float)
    ref = np.asarray(ref, dtype=float)
    lo = front.min(axis=0)
    box = float(np.prod(ref - lo))
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = lo + rng.random((n, ref.size)) * (ref - lo)
        covered = np.zeros(n, dtype=bool)
        for p in front:
            covered |= np.all(u >= p, axis=1)
        hits += int(covered.sum())
        done += n
    frac = hits / samples
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def loop_spread(front, extremes):
    """Generalized spread computed with explicit loops (nearest-neighbour gaps)."""
    pts = [tuple(map(float, p)) for p in front]
    if len(pts) < 2:
        return 1.0
    dist = lambda a, b: math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))  # noqa: E731
    d_ext = sum(min(dist(e, p) for p in pts) for e in extremes)
    d = [min(dist(p, q) for j, q in enumerate(pts) if j != i) for i, p in enumerate(pts)]
    mean = sum(d) / len(d)
    denom = d_ext + len(pts) * mean
    if denom == 0:
        return 1.0
    return (d_ext + sum(abs(v - mean) for v in d)) / denom


def enumerate_wilcoxon(x, y, alternative="greater"):
    """Exact signed-rank p-value by listing every sign assignment of the ranks."""
    d = [a - b for a, b in zip(x, y) if a != b]
    n = len(d)
    if n == 0:
        return 1.0
    mags = sorted(abs(v) for v in d)
    rank = {}
    i = 0
    while i < n:
        j = i
        while j + 1 < n and mags[j + 1] == mags[i]:
            j += 1
        rank[mags[i]] = (i + j + 2) / 2
        i = j + 1
    ranks = [rank[abs(v)] for v in d]
    observed = sum(r for r, v in zip(ranks, d) if v > 0)
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        ge += w >= observed - 1e-9
        le += w <= observed + 1e-9
    upper, lower = ge / 2**n, le / 2**n
    if alternative == "greater":
        return upper
    if alternative == "less":
        return lower
    return min(1.0, 2 * min(upper, lower))


def hand_objectives(x, s):
    """Plain-loop oracle for (cost, PEC, CDE) of one decision vector."""
    prices = list(s.electricity_prices)
    k = s.factors
    cost = pec = cde = 0.0
    for t in range(s.periods):
        x1, x2, x3 = (float(v) for v in x[3 * t : 3 * t + 3])
        if s.case.value == "pgu-off":
            x2 = 0.0
        if s.case.value == "boiler-off":
            x3 = 0.0
        cost += prices[t] * x1 + s.gas_price * x2 + s.gas_price * x3
        pec += k.ecf_pec * x1 + k.fcf_pec_pgu * x2 + k.fcf_pec_boiler * x3
        cde += k.ecf_cde * x1 + k.fcf_cde_pgu * x2 + k.fcf_cde_boiler * x3
    return cost, pec, cde


# --------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion after the run

ACCEPTANCE: dict[int, dict] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    entry = ACCEPTANCE.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] = entry["ok"] and bool(ok)
    entry["details"].append(("ok" if ok else "FAILED") + ": " + detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        entry = ACCEPTANCE[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number} {verdict}: {entry['title']}")
        for detail in entry["details"]:
            terminalreporter.write_line(f"    {detail}")
