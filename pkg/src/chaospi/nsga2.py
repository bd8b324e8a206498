"""Bi-objective NSGA-II over box-constrained real vectors.

Implemented from first principles after Deb, Pratap, Agarwal & Meyarivan
(2002): fast non-dominated sorting, crowding distance, binary tournament
selection under the crowded comparison operator, simulated binary crossover
(SBX), polynomial mutation, and (mu + lambda) elitist replacement.

Both objectives are minimized. Callers wanting to maximize an objective
negate it and un-negate on the way out; the engine never special-cases
orientation.

Determinism: all stochastic choices come from one ``numpy`` Generator seeded
with PCG64 (a named, documented 64-bit PRNG) and are consumed sequentially on
the control thread, so identical (problem, params, seed) triples reproduce
runs bit for bit. Objective evaluations happen in population index order.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError

# SBX treats parent coordinates closer than this as identical, which keeps
# crossover an exact fixed point for duplicate parents.
_SBX_EPS = 1e-14


@dataclass(frozen=True)
class Problem:
    """A bi-objective minimization problem over a box.

    ``evaluate`` maps a decision vector to its two objective values; any
    exception it raises aborts the run and propagates unchanged.
    """

    n_vars: int
    lower: np.ndarray
    upper: np.ndarray
    evaluate: Callable[[np.ndarray], tuple[float, float]]

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.n_vars < 1:
            raise ConfigError("n_vars must be >= 1")
        if lower.shape != (self.n_vars,) or upper.shape != (self.n_vars,):
            raise ConfigError("bounds must have shape (n_vars,)")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ConfigError("bounds must be finite")
        if not np.all(lower < upper):
            raise ConfigError("each lower bound must be strictly below its upper bound")


@dataclass(frozen=True)
class NsgaParams:
    """Engine hyperparameters.

    ``mutation_prob`` gates mutation per individual; ``mutation_prob_per_var``
    is the per-variable rate inside a mutated individual and defaults to
    1/n_vars when left as None.
    """

    pop_size: int = 50
    generations: int = 100
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float = 1.0
    mutation_prob_per_var: float | None = None
    mutation_eta: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2 != 0:
            raise ConfigError("pop_size must be even and >= 4")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        for name in ("crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.mutation_prob_per_var is not None and not 0.0 <= self.mutation_prob_per_var <= 1.0:
            raise ConfigError("mutation_prob_per_var must lie in [0, 1]")
        if self.crossover_eta <= 0 or self.mutation_eta <= 0:
            raise ConfigError("distribution indices must be positive")


@dataclass
class Individual:
    """A candidate solution with cached objectives and sort bookkeeping."""

    x: np.ndarray
    f: tuple[float, float] | None = None
    rank: int = -1
    crowding: float = 0.0


def dominates(f_a: Sequence[float], f_b: Sequence[float]) -> bool:
    """True when ``f_a`` is no worse in both objectives and better in one."""
    return (
        f_a[0] <= f_b[0]
        and f_a[1] <= f_b[1]
        and (f_a[0] < f_b[0] or f_a[1] < f_b[1])
    )


def _front_indices(objs: np.ndarray) -> list[np.ndarray]:
    """Peel Pareto fronts from an (n, 2) objective array.

    Builds the full domination matrix with broadcasting, then repeatedly
    extracts the set with no remaining dominators.
    """
    f1 = objs[:, 0]
    f2 = objs[:, 1]
    no_worse = (f1[:, None] <= f1[None, :]) & (f2[:, None] <= f2[None, :])
    better = (f1[:, None] < f1[None, :]) | (f2[:, None] < f2[None, :])
    dom = no_worse & better  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0).astype(np.int64)
    fronts: list[np.ndarray] = []
    current = np.flatnonzero(n_dominators == 0)
    while current.size:
        fronts.append(current)
        n_dominators[current] = -1
        n_dominators -= dom[current].sum(axis=0)
        current = np.flatnonzero(n_dominators == 0)
    return fronts


def fast_nondominated_sort(population: list[Individual]) -> list[list[int]]:
    """Partition a population into Pareto fronts and stamp each rank.

    Returns front index lists, best first; every individual appears exactly
    once.
    """
    objs = np.array([ind.f for ind in population], dtype=float)
    fronts = _front_indices(objs)
    out: list[list[int]] = []
    for rank, front in enumerate(fronts):
        for i in front:
            population[i].rank = rank
        out.append([int(i) for i in front])
    return out


def crowding_distance(objs: np.ndarray) -> np.ndarray:
    """Crowding distances for one front given as an (n, 2) objective array.

    Boundary points get infinity; interior points sum normalized gaps
    between their sorted neighbors per objective. An objective with zero
    range contributes nothing.
    """
    objs = np.asarray(objs, dtype=float)
    n = objs.shape[0]
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(objs.shape[1]):
        order = np.argsort(objs[:, j], kind="stable")
        spread = objs[order[-1], j] - objs[order[0], j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if spread > 0:
            gaps = (objs[order[2:], j] - objs[order[:-2], j]) / spread
            dist[order[1:-1]] += gaps
    return dist


def tournament_select(population: list[Individual], rng: np.random.Generator) -> int:
    """Binary tournament under the crowded comparison operator.

    Lower rank wins; equal ranks fall back to larger crowding distance; a
    full tie is settled by a coin flip.
    """
    i, j = (int(v) for v in rng.integers(0, len(population), size=2))
    if i == j:
        return i
    a, b = population[i], population[j]
    if a.rank != b.rank:
        return i if a.rank < b.rank else j
    if a.crowding != b.crowding:
        return i if a.crowding > b.crowding else j
    return i if int(rng.integers(0, 2)) == 0 else j


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    params: NsgaParams,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover with distribution index ``crossover_eta``.

    The whole pair is crossed with probability ``crossover_prob``; inside a
    crossed pair each variable participates with probability 0.5 and the two
    offspring values are assigned to the children in random order, as in
    Deb's reference implementation (the swap is what lets good coordinates
    recombine across the pair). Children are mean-preserving before the
    final clip to the box.
    """
    c1 = p1.copy()
    c2 = p2.copy()
    if rng.random() >= params.crossover_prob:
        return c1, c2
    exponent = 1.0 / (params.crossover_eta + 1.0)
    for k in range(p1.size):
        if rng.random() >= 0.5:
            continue
        x1, x2 = p1[k], p2[k]
        if abs(x1 - x2) <= _SBX_EPS:
            continue
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** exponent
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** exponent
        lo = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2)
        hi = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)
        if rng.random() < 0.5:
            lo, hi = hi, lo
        c1[k] = lo
        c2[k] = hi
    np.clip(c1, lower, upper, out=c1)
    np.clip(c2, lower, upper, out=c2)
    return c1, c2


def polynomial_mutation(
    x: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    params: NsgaParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Polynomial mutation with distribution index ``mutation_eta``.

    Each variable mutates independently at the per-variable rate; the
    perturbation is a polynomial-distributed fraction of the variable's
    range, clipped back into the box.
    """
    y = x.copy()
    rate = params.mutation_prob_per_var
    if rate is None:
        rate = 1.0 / x.size
    exponent = 1.0 / (params.mutation_eta + 1.0)
    for k in range(x.size):
        if rng.random() >= rate:
            continue
        u = rng.random()
        if u < 0.5:
            delta = (2.0 * u) ** exponent - 1.0
        else:
            delta = 1.0 - (2.0 * (1.0 - u)) ** exponent
        y[k] = y[k] + delta * (upper[k] - lower[k])
    np.clip(y, lower, upper, out=y)
    return y


def _evaluate(problem: Problem, ind: Individual) -> None:
    f1, f2 = problem.evaluate(ind.x)
    ind.f = (float(f1), float(f2))


def _rank_and_crowd(population: list[Individual]) -> list[list[int]]:
    fronts = fast_nondominated_sort(population)
    for front in fronts:
        objs = np.array([population[i].f for i in front], dtype=float)
        dists = crowding_distance(objs)
        for i, d in zip(front, dists):
            population[i].crowding = float(d)
    return fronts


def _select_next(population: list[Individual], pop_size: int) -> list[Individual]:
    """Elitist (mu + lambda) replacement: fill front by front, truncating the
    overflow front by descending crowding distance with index as tie-break."""
    fronts = _rank_and_crowd(population)
    chosen: list[Individual] = []
    for front in fronts:
        if len(chosen) + len(front) <= pop_size:
            chosen.extend(population[i] for i in front)
            if len(chosen) == pop_size:
                break
            continue
        crowd = np.array([population[i].crowding for i in front])
        idx = np.array(front)
        order = np.lexsort((idx, -crowd))
        need = pop_size - len(chosen)
        chosen.extend(population[idx[k]] for k in order[:need])
        break
    return chosen


def front0(population: list[Individual]) -> list[Individual]:
    """Non-dominated members of a population, in population order."""
    objs = np.array([ind.f for ind in population], dtype=float)
    return [population[i] for i in _front_indices(objs)[0]]


def run(
    problem: Problem,
    params: NsgaParams,
    on_generation: Callable[[int, list[Individual]], None] | None = None,
    trace_path: str | None = None,
) -> list[Individual]:
    """Run the full loop and return a deep copy of the final front 0.

    ``on_generation`` fires after each survivor selection (and once for the
    evaluated initial population) with the generation number and the current
    population; mutating either is a caller bug. ``trace_path`` optionally
    writes one ``generation,front0_size,best_f1,best_f2`` CSV row per
    generation.
    """
    rng = np.random.Generator(np.random.PCG64(params.seed))
    lower, upper = problem.lower, problem.upper

    mat = rng.uniform(lower, upper, size=(params.pop_size, problem.n_vars))
    population = [Individual(x=mat[i].copy()) for i in range(params.pop_size)]
    for ind in population:
        _evaluate(problem, ind)
    _rank_and_crowd(population)

    trace = open(trace_path, "w") if trace_path is not None else None
    try:
        if trace:
            trace.write("generation,front0_size,best_f1,best_f2\n")
        _observe(0, population, on_generation, trace)
        for gen in range(1, params.generations + 1):
            offspring: list[Individual] = []
            for _ in range(params.pop_size // 2):
                i = tournament_select(population, rng)
                j = tournament_select(population, rng)
                c1, c2 = sbx_crossover(
                    population[i].x, population[j].x, lower, upper, params, rng
                )
                for child in (c1, c2):
                    if rng.random() < params.mutation_prob:
                        child = polynomial_mutation(child, lower, upper, params, rng)
                    offspring.append(Individual(x=child))
            for ind in offspring:
                _evaluate(problem, ind)
            population = _select_next(population + offspring, params.pop_size)
            _observe(gen, population, on_generation, trace)
    finally:
        if trace:
            trace.close()
    return copy.deepcopy(front0(population))


def _observe(gen, population, on_generation, trace) -> None:
    if on_generation is not None:
        on_generation(gen, population)
    if trace is not None:
        best = front0(population)
        objs = np.array([ind.f for ind in best], dtype=float)
        trace.write(
            f"{gen},{len(best)},{float(objs[:, 0].min())!r},{float(objs[:, 1].min())!r}\n"
        )
