"""Constrained multi-objective evolutionary engine.

Generalized differential evolution (GDE3 selection rules with a best
compromise pick on the final front) and an NSGA-II baseline sharing the same
variation operators, sorting and truncation.

Problems are evaluated in batches: ``problem.evaluate(X)`` takes a
``(pop, n_var)`` array and returns ``(F, G)`` with objective rows ``F`` and
non-negative violation rows ``G``. All objectives are minimized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

__all__ = [
    "AlgorithmParams",
    "EvaluationError",
    "FunctionProblem",
    "Individual",
    "Problem",
    "Survivor",
    "best_compromise",
    "best_compromise_index",
    "compromise_distances",
    "constraint_dominance_matrix",
    "crowding_distances",
    "de_crossover",
    "de_mutation",
    "environmental_truncate",
    "evolve",
    "fast_nondominated_sort",
    "gde3_survivor",
    "nsga2_evolve",
    "pareto_dominates",
    "repair_bounds",
    "violation_dominates",
]


class EvaluationError(RuntimeError):
    """Raised when the problem evaluator fails inside an optimization run."""


class Problem(Protocol):
    n_var: int
    lower: np.ndarray
    upper: np.ndarray
    feasibility_tol: float

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class FunctionProblem:
    """Adapt a per-vector callable ``x -> (objectives, violations)`` to a batch problem."""

    def __init__(self, func, lower, upper, feasibility_tol: float = 0.0):
        self.func = func
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.n_var = self.lower.size
        self.feasibility_tol = feasibility_tol

    def evaluate(self, X):
        rows = [self.func(x) for x in np.atleast_2d(X)]
        F = np.array([np.atleast_1d(np.asarray(f, dtype=float)) for f, _ in rows])
        G = np.array([np.atleast_1d(np.asarray(g, dtype=float)) for _, g in rows])
        return F, G


@dataclass
class Individual:
    decision: np.ndarray
    objectives: np.ndarray
    violations: np.ndarray
    rank: int = 0
    crowding: float = 0.0

    def is_feasible(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.violations <= tol))


@dataclass(frozen=True)
class AlgorithmParams:
    population_size: int = 100
    max_generations: int = 250
    F: float = 0.5
    CR: float = 0.5
    seed: int = 0
    bounds: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4 (mutation needs three parents distinct from the target)")
        if self.max_generations < 1:
            raise ValueError("max_generations must be positive")
        if not 0.0 < self.F <= 2.0:
            raise ValueError(f"F must lie in (0, 2], got {self.F}")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError(f"CR must lie in [0, 1], got {self.CR}")


class Survivor(enum.Enum):
    PARENT = "parent"
    TRIAL = "trial"
    BOTH = "both"


# --------------------------------------------------------------------------
# dominance


def _check_dims(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def pareto_dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a, b = _check_dims(a, b)
    return bool(np.all(a <= b) and np.any(a < b))


def violation_dominates(a, b) -> bool:
    a, b = _check_dims(a, b)
    return bool(np.all(a <= b) and np.any(a < b))


def _clip_violations(G, tol):
    G = np.asarray(G, dtype=float)
    return np.where(G <= tol, 0.0, G)


def _dominance_matrix(A):
    le = np.all(A[:, None, :] <= A[None, :, :], axis=-1)
    lt = np.any(A[:, None, :] < A[None, :, :], axis=-1)
    return le & lt


def constraint_dominance_matrix(F, G=None, tol: float = 0.0) -> np.ndarray:
    """Boolean matrix ``D[i, j]``: row ``i`` constraint-dominates row ``j``.

    Feasible beats infeasible; two infeasible rows compare by dominance over
    violation magnitudes; two feasible rows by objective dominance.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    if G is None:
        return _dominance_matrix(F)
    G = _clip_violations(np.reshape(G, (n, -1)), tol)
    feas = np.all(G == 0.0, axis=1)
    both_feas = feas[:, None] & feas[None, :]
    both_inf = ~feas[:, None] & ~feas[None, :]
    return np.where(
        both_feas,
        _dominance_matrix(F),
        np.where(both_inf, _dominance_matrix(G), feas[:, None] & ~feas[None, :]),
    )


def _as_arrays(pop):
    if isinstance(pop, np.ndarray):
        return pop, None
    F = np.array([ind.objectives for ind in pop], dtype=float)
    G = np.array([ind.violations for ind in pop], dtype=float)
    return F, G


def fast_nondominated_sort(pop, violations=None, tol: float = 0.0) -> list[np.ndarray]:
    """Partition a population into constraint-dominance fronts.

    ``pop`` is either a list of :class:`Individual` (ranks are written back) or
    an objective matrix, optionally paired with a violation matrix. Returns a
    list of index arrays, best front first, indices ascending within a front.
    """
    individuals = None
    if isinstance(pop, np.ndarray):
        F, G = pop, violations
    else:
        individuals = pop
        F, G = _as_arrays(pop)
    if len(F) == 0:
        return []
    D = constraint_dominance_matrix(F, G, tol)
    count = D.sum(axis=0)
    remaining = np.ones(len(F), dtype=bool)
    fronts = []
    while remaining.any():
        current = np.flatnonzero(remaining & (count == 0))
        fronts.append(current)
        remaining[current] = False
        count = count - D[current].sum(axis=0)
    if individuals is not None:
        for k, front in enumerate(fronts):
            for i in front:
                individuals[i].rank = k
    return fronts


def crowding_distances(front) -> np.ndarray:
    """Crowding distance of each member of one front.

    Boundary members of every objective with non-zero span get ``inf``;
    interior members sum their span-normalized neighbour gaps. Objectives
    with zero span contribute nothing.
    """
    F = front if isinstance(front, np.ndarray) else _as_arrays(front)[0]
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n, m = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        span = col[-1] - col[0]
        if span <= 0.0:
            continue
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def environmental_truncate(pop, n: int, violations=None, tol: float = 0.0, iterative: bool = False) -> np.ndarray:
    """Indices of the ``n`` survivors of ``pop``.

    Whole fronts are taken while they fit. The front that does not fit is cut
    by descending crowding distance computed once for that front; ties go to
    the lower population index. With ``iterative`` the least crowded member
    is dropped one at a time and distances are recomputed after each removal
    (ties drop the higher index).
    """
    F, G = (pop, violations) if isinstance(pop, np.ndarray) else _as_arrays(pop)
    size = len(F)
    if size < n:
        raise ValueError(f"cannot truncate a population of {size} to {n}")
    chosen = []
    remain = n
    for front in fast_nondominated_sort(F, G, tol):
        if remain <= 0:
            break
        if len(front) <= remain:
            chosen.append(front)
            remain -= len(front)
            continue
        if iterative:
            members = front.copy()
            while len(members) > remain:
                cd = crowding_distances(F[members])
                worst = np.flatnonzero(cd == cd.min())[-1]
                members = np.delete(members, worst)
            chosen.append(members)
        else:
            cd = crowding_distances(F[front])
            # lexsort: last key is primary
            order = np.lexsort((front, -cd))
            chosen.append(np.sort(front[order[:remain]]))
        remain = 0
    return np.concatenate(chosen) if chosen else np.empty(0, dtype=int)


def _rank_and_crowding(F, G, tol):
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for k, front in enumerate(fast_nondominated_sort(F, G, tol)):
        rank[front] = k
        crowd[front] = crowding_distances(F[front])
    return rank, crowd


# --------------------------------------------------------------------------
# variation


def repair_bounds(v, lower, upper) -> np.ndarray:
    return np.clip(np.asarray(v, dtype=float), lower, upper)


def _draw_donors(rng: np.random.Generator, size: int, targets: np.ndarray) -> np.ndarray:
    """Three distinct donor indices per target, all different from the target."""
    keys = rng.random((len(targets), size))
    keys[np.arange(len(targets)), targets] = np.inf
    return np.argsort(keys, axis=1, kind="stable")[:, :3]


def _decisions(pop) -> np.ndarray:
    if isinstance(pop, np.ndarray):
        return pop
    return np.array([ind.decision for ind in pop], dtype=float)


def de_mutation(pop, i: int, F: float, rng: np.random.Generator, lower=None, upper=None) -> np.ndarray:
    """DE/rand/1 mutant ``x_r3 + F * (x_r1 - x_r2)`` for target ``i``.

    The mutant is clamped to ``[lower, upper]`` when bounds are given.
    """
    X = _decisions(pop)
    if len(X) < 4:
        raise ValueError("de_mutation needs a population of at least 4")
    if not 0 <= i < len(X):
        raise IndexError(f"target index {i} out of range")
    r1, r2, r3 = _draw_donors(rng, len(X), np.array([i]))[0]
    mutant = X[r3] + F * (X[r1] - X[r2])
    if lower is not None:
        mutant = repair_bounds(mutant, lower, upper)
    return mutant


def de_crossover(target, mutant, CR: float, rng: np.random.Generator) -> np.ndarray:
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError(f"length mismatch: {target.shape} vs {mutant.shape}")
    mask = rng.random(target.size) < CR
    mask[rng.integers(target.size)] = True
    return np.where(mask, mutant, target)


def _variation(X, targets, F, CR, rng, lower, upper):
    """Vectorized mutation + repair + binomial crossover for each row of ``targets``."""
    n, d = X.shape
    idx = np.arange(n)
    donors = _draw_donors(rng, n, idx)
    mutants = X[donors[:, 2]] + F * (X[donors[:, 0]] - X[donors[:, 1]])
    mutants = repair_bounds(mutants, lower, upper)
    mask = rng.random((n, d)) < CR
    mask[idx, rng.integers(0, d, n)] = True
    return np.where(mask, mutants, targets)


# --------------------------------------------------------------------------
# selection


def gde3_survivor(parent: Individual, trial: Individual, tol: float = 0.0) -> Survivor:
    p_feas = parent.is_feasible(tol)
    t_feas = trial.is_feasible(tol)
    if not p_feas and not t_feas:
        gp = _clip_violations(parent.violations, tol)
        gt = _clip_violations(trial.violations, tol)
        return Survivor.PARENT if violation_dominates(gp, gt) else Survivor.TRIAL
    if p_feas != t_feas:
        return Survivor.PARENT if p_feas else Survivor.TRIAL
    if pareto_dominates(parent.objectives, trial.objectives):
        return Survivor.PARENT
    if pareto_dominates(trial.objectives, parent.objectives):
        return Survivor.TRIAL
    return Survivor.BOTH


def _rowwise_dominates(A, B):
    return np.all(A <= B, axis=1) & np.any(A < B, axis=1)


def _gde3_select(Fp, Gp, Ft, Gt, tol):
    """Vectorized :func:`gde3_survivor`: returns (keep_parent, keep_trial) masks."""
    Gp = _clip_violations(Gp, tol)
    Gt = _clip_violations(Gt, tol)
    pf = np.all(Gp == 0.0, axis=1)
    tf = np.all(Gt == 0.0, axis=1)
    both_inf = ~pf & ~tf
    both_feas = pf & tf
    p_dom_g = _rowwise_dominates(Gp, Gt)
    p_dom_f = _rowwise_dominates(Fp, Ft)
    t_dom_f = _rowwise_dominates(Ft, Fp)
    keep_parent = np.where(both_inf, p_dom_g, np.where(both_feas, ~t_dom_f, pf))
    keep_trial = np.where(both_inf, ~p_dom_g, np.where(both_feas, ~p_dom_f, tf))
    return keep_parent, keep_trial


# --------------------------------------------------------------------------
# drivers


def _bounds(problem, params):
    if params.bounds is not None:
        lower, upper = params.bounds
    else:
        lower, upper = problem.lower, problem.upper
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    return lower, upper


def _evaluate(problem, X, generation):
    try:
        F, G = problem.evaluate(X)
    except Exception as exc:
        where = ""
        for k, x in enumerate(X):
            try:
                problem.evaluate(x[None, :])
            except Exception:
                where = f", individual {k}"
                break
        raise EvaluationError(f"evaluation failed at generation {generation}{where}: {exc}") from exc
    F = np.asarray(F, dtype=float).reshape(len(X), -1)
    G = np.asarray(G, dtype=float).reshape(len(X), -1)
    return F, G


def _initialize(problem, params, rng):
    lower, upper = _bounds(problem, params)
    N = params.population_size
    X = rng.random((N, lower.size)) * (upper - lower) + lower
    F, G = _evaluate(problem, X, 0)
    return lower, upper, X, F, G


def _to_individuals(X, F, G, tol):
    rank, crowd = _rank_and_crowding(F, G, tol)
    return [
        Individual(X[i].copy(), F[i].copy(), G[i].copy(), int(rank[i]), float(crowd[i]))
        for i in range(len(X))
    ]


Callback = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


def evolve(problem: Problem, params: AlgorithmParams, callback: Callback | None = None) -> list[Individual]:
    """Run generalized differential evolution and return the final population.

    Each generation builds an offspring pool of ``N..2N`` members by pairing
    every parent with its DE trial vector and keeping the survivors of the
    GDE3 rules (both are kept when mutually non-dominated), then truncates
    the pool back to ``N`` by non-dominated sorting, pruning the splitting
    front one least-crowded member at a time.
    ``callback(generation, X, F, G)`` sees the population after each truncation.
    """
    rng = np.random.default_rng(params.seed)
    tol = getattr(problem, "feasibility_tol", 0.0)
    lower, upper, X, F, G = _initialize(problem, params, rng)
    N = params.population_size
    for gen in range(1, params.max_generations + 1):
        U = _variation(X, X, params.F, params.CR, rng, lower, upper)
        FU, GU = _evaluate(problem, U, gen)
        keep_p, keep_t = _gde3_select(F, G, FU, GU, tol)
        # interleave parent/trial so pool order follows the parent index
        order_X = np.stack([X, U], axis=1).reshape(2 * N, -1)
        order_F = np.stack([F, FU], axis=1).reshape(2 * N, -1)
        order_G = np.stack([G, GU], axis=1).reshape(2 * N, -1)
        keep = np.stack([keep_p, keep_t], axis=1).reshape(-1)
        X, F, G = order_X[keep], order_F[keep], order_G[keep]
        if len(X) > N:
            idx = environmental_truncate(F, N, G, tol, iterative=True)
            X, F, G = X[idx], F[idx], G[idx]
        if callback is not None:
            callback(gen, X, F, G)
    return _to_individuals(X, F, G, tol)


def nsga2_evolve(problem: Problem, params: AlgorithmParams, callback: Callback | None = None) -> list[Individual]:
    """Generational NSGA-II using DE/rand/1/bin variation.

    A mating pool is filled by binary tournament (lower rank wins, then
    larger crowding, then lower index); each pool member is crossed with a DE
    mutant built from three other pool members. Parents and offspring are
    merged and truncated to ``N``.
    """
    rng = np.random.default_rng(params.seed)
    tol = getattr(problem, "feasibility_tol", 0.0)
    lower, upper, X, F, G = _initialize(problem, params, rng)
    N = params.population_size
    for gen in range(1, params.max_generations + 1):
        rank, crowd = _rank_and_crowding(F, G, tol)
        pairs = rng.integers(0, N, (N, 2))
        a, b = pairs[:, 0], pairs[:, 1]
        a_wins = (rank[a] < rank[b]) | (
            (rank[a] == rank[b]) & ((crowd[a] > crowd[b]) | ((crowd[a] == crowd[b]) & (a <= b)))
        )
        mating = X[np.where(a_wins, a, b)]
        U = _variation(mating, mating, params.F, params.CR, rng, lower, upper)
        FU, GU = _evaluate(problem, U, gen)
        X = np.vstack([X, U])
        F = np.vstack([F, FU])
        G = np.vstack([G, GU])
        idx = environmental_truncate(F, N, G, tol)
        X, F, G = X[idx], F[idx], G[idx]
        if callback is not None:
            callback(gen, X, F, G)
    return _to_individuals(X, F, G, tol)


# --------------------------------------------------------------------------
# decision making


def compromise_distances(F, normalize: bool = False) -> np.ndarray:
    """Euclidean distance of each objective row to the ideal point at the origin.

    With ``normalize`` the rows are first min-max scaled over the set itself.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if normalize:
        lo = F.min(axis=0)
        span = F.max(axis=0) - lo
        F = np.divide(F - lo, span, out=np.zeros_like(F), where=span > 0)
    return np.sqrt(np.sum(F * F, axis=1))


def best_compromise_index(F, normalize: bool = False) -> int:
    if len(F) == 0:
        raise ValueError("best compromise of an empty front")
    return int(np.argmin(compromise_distances(F, normalize)))


def best_compromise(front: Sequence[Individual], normalize: bool = False) -> Individual:
    if not front:
        raise ValueError("best compromise of an empty front")
    F = np.array([ind.objectives for ind in front], dtype=float)
    return front[best_compromise_index(F, normalize)]
