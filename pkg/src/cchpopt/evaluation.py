"""Front quality indicators, the Wilcoxon signed-rank test and a multi-run harness."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .moea import AlgorithmParams, evolve, fast_nondominated_sort, nsga2_evolve

__all__ = [
    "ALGORITHMS",
    "FrontSample",
    "IndicatorReport",
    "batch_run",
    "feasible_front",
    "hypervolume",
    "nondominated",
    "normalize_front",
    "spread",
    "wilcoxon_signed_rank",
]

log = logging.getLogger(__name__)

ALGORITHMS: dict[str, Callable] = {"bcs-gde": evolve, "nsga2": nsga2_evolve}

EXACT_WILCOXON_MAX_N = 25


def nondominated(F) -> np.ndarray:
    """Unique mutually non-dominated rows of ``F`` (sorted lexicographically)."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.size == 0:
        return F.reshape(0, F.shape[-1] if F.ndim == 2 else 0)
    F = np.unique(F, axis=0)
    return F[fast_nondominated_sort(F)[0]]


@dataclass(frozen=True)
class FrontSample:
    """Objective vectors of a feasible, mutually non-dominated set."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if len(pts) > 1 and len(fast_nondominated_sort(pts)) > 1:
            raise ValueError("front sample contains dominated points")
        object.__setattr__(self, "points", pts)

    def __array__(self, dtype=None, copy=None):
        return self.points if dtype is None else self.points.astype(dtype)

    def __len__(self):
        return len(self.points)


def _points(front) -> np.ndarray:
    pts = np.asarray(front, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 0)
    return np.atleast_2d(pts)


def normalize_front(front, reference, names: Sequence[str] | None = None) -> np.ndarray:
    """Min-max scale ``front`` by the per-objective extremes of ``reference``, clipped to [0, 1]."""
    ref = _points(reference)
    lo = ref.min(axis=0)
    span = ref.max(axis=0) - lo
    for j in np.flatnonzero(span <= 0):
        label = names[j] if names is not None else f"objective {j}"
        raise ValueError(f"reference front has zero span in {label}")
    return _scale(_points(front), lo, span)


def _scale(pts, lo, span):
    return np.clip((pts - lo) / span, 0.0, 1.0)


def _hv2d(pts, ref):
    """Area of the staircase dominated by 2-D points up to ``ref``."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    stair = []
    best_y = ref[1]
    for x, y in pts[order]:
        if y < best_y:
            stair.append((x, y))
            best_y = y
    area = 0.0
    for k, (x, y) in enumerate(stair):
        right = stair[k + 1][0] if k + 1 < len(stair) else ref[0]
        area += (right - x) * (ref[1] - y)
    return area


def hypervolume(front, ref_point) -> float:
    """Exact hypervolume dominated by ``front`` up to ``ref_point`` (1-3 objectives).

    Three-objective fronts are sliced along the last objective; each slab
    contributes the two-dimensional staircase area of the points below it.
    """
    pts = _points(front)
    ref = np.asarray(ref_point, dtype=float)
    if len(pts) == 0:
        return 0.0
    if pts.shape[1] != ref.size:
        raise ValueError(f"dimension mismatch: front has {pts.shape[1]} objectives, reference {ref.size}")
    if np.any(pts > ref):
        raise ValueError("front member exceeds the reference point")
    m = ref.size
    if m == 1:
        return float(ref[0] - pts[:, 0].min())
    if m == 2:
        return float(_hv2d(pts, ref))
    if m != 3:
        raise ValueError("hypervolume supports at most 3 objectives")
    order = np.argsort(pts[:, 2], kind="stable")
    pts = pts[order]
    volume = 0.0
    for k in range(len(pts)):
        top = pts[k + 1, 2] if k + 1 < len(pts) else ref[2]
        depth = top - pts[k, 2]
        if depth > 0:
            volume += depth * _hv2d(pts[: k + 1, :2], ref[:2])
    return float(volume)


def _extremes(reference) -> np.ndarray:
    """One extreme point per objective: the reference member minimizing it (ties lexicographic)."""
    ref = _points(reference)
    out = []
    for j in range(ref.shape[1]):
        keys = [ref[:, k] for k in reversed(range(ref.shape[1])) if k != j] + [ref[:, j]]
        out.append(ref[np.lexsort(keys)[0]])
    return np.array(out)


def spread(front, reference) -> float:
    """Generalized spread of ``front`` against the extreme points of ``reference``.

    ``(sum_e d(e, front) + sum_i |d_i - mean d|) / (sum_e d(e, front) + n * mean d)``
    where ``d_i`` is the distance from member ``i`` to its nearest other member.
    Fronts with fewer than two members score 1.0.
    """
    pts = _points(front)
    if len(pts) < 2:
        return 1.0
    ext = _extremes(reference)
    d_ext = np.sqrt(((ext[:, None, :] - pts[None, :, :]) ** 2).sum(-1)).min(axis=1).sum()
    D = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(D, np.inf)
    d = D.min(axis=1)
    mean = d.mean()
    denom = d_ext + len(pts) * mean
    if denom == 0:
        return 1.0
    return float((d_ext + np.abs(d - mean).sum()) / denom)


# --------------------------------------------------------------------------
# Wilcoxon signed-rank


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments giving each value of the doubled positive-rank sum."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y, alternative: str = "greater") -> float:
    """Paired Wilcoxon signed-rank p-value.

    ``alternative="greater"`` tests whether ``x`` tends to exceed ``y``;
    ``"less"`` the reverse; ``"two-sided"`` either. Zero differences are
    dropped and tied magnitudes share mid-ranks. The null distribution is
    exact for up to 25 non-zero differences and a tie-corrected normal
    approximation beyond. Returns 1.0 when every difference is zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if alternative not in ("greater", "less", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    d = x - y
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 1.0
    ranks = rankdata(np.abs(d))
    w_plus = ranks[d > 0].sum()

    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_counts(doubled)
        w2 = int(round(2 * w_plus))
        total = 2**n
        upper = sum(counts[w2:]) / total
        lower = sum(counts[: w2 + 1]) / total
    else:
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        sd = math.sqrt(var)
        upper = 0.5 * math.erfc((w_plus - mean - 0.5) / sd / math.sqrt(2))
        lower = 0.5 * math.erfc(-(w_plus - mean + 0.5) / sd / math.sqrt(2))
    if alternative == "greater":
        p = upper
    elif alternative == "less":
        p = lower
    else:
        p = min(1.0, 2 * min(upper, lower))
    return float(min(1.0, p))


# --------------------------------------------------------------------------
# multi-run harness


def feasible_front(population, tol: float = 0.0) -> np.ndarray:
    """Unique non-dominated objective vectors among the feasible members of a population."""
    F = np.array([ind.objectives for ind in population if ind.is_feasible(tol)], dtype=float)
    if len(F) == 0:
        return np.empty((0, len(population[0].objectives) if population else 0))
    return nondominated(F)


@dataclass
class IndicatorReport:
    algorithms: list[str]
    hv: dict[str, np.ndarray]
    spread: dict[str, np.ndarray]
    fronts: dict[str, list[np.ndarray]]
    run_ids: dict[str, list[int]]
    reference_front: np.ndarray
    pvalues: dict[tuple[str, str], tuple[float, float]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def runs(self, name: str) -> int:
        return len(self.hv[name])

    def summary_rows(self):
        rows = []
        for name in self.algorithms:
            for indicator, samples in (("HV", self.hv[name]), ("spread", self.spread[name])):
                if len(samples):
                    stats = (samples.max(), samples.min(), samples.mean(), float(np.median(samples)))
                else:
                    stats = (math.nan,) * 4
                rows.append((name, indicator, len(samples), *stats))
        return rows

    def indicators_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "indicator", "runs", "max", "min", "ave", "median"])
        for name, ind, n, mx, mn, ave, med in self.summary_rows():
            w.writerow([name, ind, n, f"{mx:.6f}", f"{mn:.6f}", f"{ave:.6f}", f"{med:.6f}"])
        return buf.getvalue()

    def wilcoxon_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["comparison", "p_value_hv", "p_value_spread", "note"])
        base = self.algorithms[0]
        for other in self.algorithms[1:]:
            label = f"{base} vs {other}"
            if (base, other) in self.pvalues:
                p_hv, p_sp = self.pvalues[(base, other)]
                w.writerow([label, f"{p_hv:.6g}", f"{p_sp:.6g}", ""])
            else:
                w.writerow([label, "", "", "skipped: fewer than 5 paired runs"])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = ["Quality indicators (normalized against the combined reference front, HV reference point 1)"]
        lines.append(f"{'algorithm':<10} {'indicator':<8} {'runs':>4} {'max':>8} {'min':>8} {'ave':>8} {'median':>8}")
        for name, ind, n, mx, mn, ave, med in self.summary_rows():
            lines.append(f"{name:<10} {ind:<8} {n:>4d} {mx:>8.4f} {mn:>8.4f} {ave:>8.4f} {med:>8.4f}")
        if len(self.algorithms) > 1:
            lines.append("")
            lines.append("Wilcoxon signed-rank (one-sided: first algorithm better)")
            base = self.algorithms[0]
            for other in self.algorithms[1:]:
                if (base, other) in self.pvalues:
                    p_hv, p_sp = self.pvalues[(base, other)]
                    lines.append(f"{base} vs {other}: p(HV) = {p_hv:.4g}, p(spread) = {p_sp:.4g}")
                else:
                    lines.append(f"{base} vs {other}: skipped (n too small)")
        lines += self.notes
        return "\n".join(lines) + "\n"


def _one_run(task):
    name, problem, params = task
    tol = getattr(problem, "feasibility_tol", 0.0)
    pop = ALGORITHMS[name](problem, params)
    return feasible_front(pop, tol)


def batch_run(
    algorithms: Sequence[str],
    problem,
    runs: int,
    params: AlgorithmParams,
    workers: int = 1,
    runner: Mapping[str, Callable] | None = None,
) -> IndicatorReport:
    """Run each algorithm ``runs`` times and compare their feasible fronts.

    Run ``r`` uses seed ``params.seed + r`` for every algorithm, so samples
    are paired by run. Fronts are normalized against the non-dominated union
    of all fronts; HV uses reference point (1, ..., 1). The first algorithm is
    compared one-sided against each of the others.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    for name in algorithms:
        if name not in ALGORITHMS and (runner is None or name not in runner):
            raise ValueError(f"unknown algorithm {name!r}; valid names: {', '.join(ALGORITHMS)}")
    tasks = [(name, problem, replace(params, seed=params.seed + r)) for name in algorithms for r in range(runs)]

    def execute(task):
        name, prob, p = task
        if runner is not None and name in runner:
            tol = getattr(prob, "feasibility_tol", 0.0)
            return feasible_front(runner[name](prob, p), tol)
        return _one_run(task)

    results: list[np.ndarray | Exception] = []
    if workers > 1 and runner is None:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one_run, t) for t in tasks]
            for fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:  # noqa: BLE001
                    results.append(exc)
    else:
        for t in tasks:
            try:
                results.append(execute(t))
            except Exception as exc:  # noqa: BLE001
                results.append(exc)

    fronts: dict[str, list[np.ndarray]] = {name: [] for name in algorithms}
    run_ids: dict[str, list[int]] = {name: [] for name in algorithms}
    notes = []
    for (name, _, p), res in zip(tasks, results):
        r = p.seed - params.seed
        if isinstance(res, Exception):
            msg = f"{name} run {r} failed and was excluded: {res}"
            log.warning(msg)
            notes.append(msg)
            continue
        fronts[name].append(res)
        run_ids[name].append(r)

    all_points = [f for fs in fronts.values() for f in fs if len(f)]
    n_obj = all_points[0].shape[1] if all_points else 3
    reference = nondominated(np.vstack(all_points)) if all_points else np.empty((0, n_obj))
    if len(reference):
        lo = reference.min(axis=0)
        span = reference.max(axis=0) - lo
        if np.any(span <= 0):
            notes.append("reference front is degenerate in some objective; its span was taken as 1")
            span = np.where(span > 0, span, 1.0)
        unit_ref = _scale(reference, lo, span)
    else:
        lo, span, unit_ref = np.zeros(n_obj), np.ones(n_obj), np.empty((0, n_obj))
        notes.append("no run produced a feasible solution")

    ones = np.ones(n_obj)
    hv: dict[str, np.ndarray] = {}
    sp: dict[str, np.ndarray] = {}
    for name in algorithms:
        hv_s, sp_s = [], []
        for front in fronts[name]:
            unit = _scale(front, lo, span) if len(front) else front
            hv_s.append(hypervolume(unit, ones))
            sp_s.append(spread(unit, unit_ref) if len(unit_ref) else 1.0)
        hv[name] = np.array(hv_s)
        sp[name] = np.array(sp_s)

    report = IndicatorReport(list(algorithms), hv, sp, fronts, run_ids, reference, notes=notes)
    base = algorithms[0]
    for other in algorithms[1:]:
        common = sorted(set(run_ids[base]) & set(run_ids[other]))
        if len(common) < 5:
            report.notes.append(f"Wilcoxon {base} vs {other} skipped: {len(common)} paired runs (need 5)")
            continue
        ib = [run_ids[base].index(r) for r in common]
        io_ = [run_ids[other].index(r) for r in common]
        p_hv = wilcoxon_signed_rank(hv[base][ib], hv[other][io_], "greater")
        p_sp = wilcoxon_signed_rank(sp[base][ib], sp[other][io_], "less")
        report.pvalues[(base, other)] = (p_hv, p_sp)
    return report
