"""Differential-evolution search over protographs and repetition profiles.

rand/1/bin on a real-valued relaxation: base-matrix genes are rounded to the
integer grid [0, max_edge], repetition genes are projected to the simplex.
The cost of a candidate is its joint density-evolution threshold.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .density_evolution import de_threshold
from .protograph import ProtographError, validate_protograph
from .txchain import RepetitionDD

DEFAULT_F = 0.5
DEFAULT_CR = 0.9
DEFAULT_MAX_EDGE = 3


@dataclass
class Candidate:
    base_matrix: np.ndarray
    nu: RepetitionDD
    fitness: float

    def key(self):
        h = hashlib.sha256()
        h.update(self.base_matrix.tobytes())
        h.update(np.asarray(self.nu.nu).tobytes())
        return h.hexdigest()


def de_generation(population, costs, cost_fn, F=DEFAULT_F, CR=DEFAULT_CR,
                  rng=None):
    """One rand/1/bin generation with greedy selection.

    population: (P, G) real genomes.  Returns (new population, new costs).
    Mutant = x_a + F * (x_b - x_c); binomial crossover with one forced gene;
    a trial replaces its target only when its cost is lower or equal.
    """
    if rng is None:
        rng = np.random.default_rng()
    pop = np.asarray(population, dtype=np.float64)
    P, G = pop.shape
    if P < 4:
        raise ValueError("population size must be at least 4")
    costs = np.asarray(costs, dtype=np.float64).copy()
    new_pop = pop.copy()
    for i in range(P):
        choices = [j for j in range(P) if j != i]
        a, b, c = rng.choice(choices, size=3, replace=False)
        mutant = pop[a] + F * (pop[b] - pop[c])
        cross = rng.random(G) < CR
        cross[rng.integers(G)] = True  # forced gene
        trial = np.where(cross, mutant, pop[i])
        trial_cost = cost_fn(trial)
        if trial_cost <= costs[i]:
            new_pop[i] = trial
            costs[i] = trial_cost
    return new_pop, costs


def _project_simplex(v):
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / (np.arange(len(v)) + 1) > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + theta, 0.0)


class EnsembleOptimizer:
    """Joint search over a fixed-shape base matrix and nu on support {1..L}."""

    def __init__(self, shape, rate, K_a, layout, N, *, L=2, optimize_nu=True,
                 max_edge=DEFAULT_MAX_EDGE, split_ratio=1.0, seed=0,
                 F=DEFAULT_F, CR=DEFAULT_CR, pop_size=None,
                 de_max_iters=300, threshold_resolution_db=0.1,
                 fixed_nu=None):
        nc, nv = shape
        if abs((nv - nc) / nv - rate) > 1e-9:
            raise ValueError("shape inconsistent with target rate")
        self.shape = (nc, nv)
        self.rate = rate
        self.K_a = K_a
        self.layout = layout
        self.N = N
        self.L = L
        self.optimize_nu = optimize_nu and fixed_nu is None
        self.fixed_nu = fixed_nu
        self.max_edge = max_edge
        self.split_ratio = split_ratio
        self.F = F
        self.CR = CR
        self.de_max_iters = de_max_iters
        self.resolution = threshold_resolution_db
        self.n_mat = nc * nv
        self.n_genes = self.n_mat + (L if self.optimize_nu else 0)
        self.pop_size = pop_size if pop_size is not None else 10 * self.n_genes
        if self.pop_size < 4:
            self.pop_size = 4
        self.rng = np.random.default_rng(seed)
        self._cache = {}
        self.evaluations = 0
        self.population = None
        self.costs = None

    # genome <-> candidate
    def decode(self, genome):
        mat = np.rint(genome[: self.n_mat]).astype(np.int64)
        mat = np.clip(mat, 0, self.max_edge).reshape(self.shape)
        if self.optimize_nu:
            nu = _project_simplex(genome[self.n_mat :])
            # keep nu_L strictly positive so the support stays {1..L}
            if nu[-1] <= 0:
                nu = nu + 1e-6
                nu = nu / nu.sum()
            dd = RepetitionDD(nu=tuple(nu))
        else:
            dd = self.fixed_nu
        return mat, dd

    def cost(self, genome):
        mat, dd = self.decode(genome)
        key = (mat.tobytes(), tuple(np.round(dd.nu, 9)))
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        try:
            proto = validate_protograph(mat)
        except ProtographError:
            self._cache[key] = math.inf
            return math.inf
        thr = de_threshold(proto, dd, self.layout, self.N, self.K_a,
                           split_ratio=self.split_ratio,
                           resolution_db=self.resolution,
                           max_iters=self.de_max_iters)
        self._cache[key] = thr
        return thr

    def _init_population(self):
        pop = np.empty((self.pop_size, self.n_genes))
        pop[:, : self.n_mat] = self.rng.uniform(
            0.0, self.max_edge, size=(self.pop_size, self.n_mat))
        if self.optimize_nu:
            raw = self.rng.random((self.pop_size, self.L))
            pop[:, self.n_mat :] = raw / raw.sum(axis=1, keepdims=True)
        self.population = pop
        self.costs = np.array([self.cost(g) for g in pop])

    def run(self, budget, checkpoint_path=None):
        """Search until `budget` threshold evaluations; return best Candidate."""
        if self.population is None:
            self._init_population()
        while self.evaluations < budget:
            self.population, self.costs = de_generation(
                self.population, self.costs, self.cost, F=self.F, CR=self.CR,
                rng=self.rng)
            if checkpoint_path is not None:
                self.save_checkpoint(checkpoint_path)
        best = int(np.argmin(self.costs))
        if not np.isfinite(self.costs[best]):
            raise RuntimeError(
                "no candidate with a finite density-evolution threshold")
        mat, dd = self.decode(self.population[best])
        return Candidate(base_matrix=mat, nu=dd,
                         fitness=float(self.costs[best]))

    def save_checkpoint(self, path):
        state = json.dumps(self.rng.bit_generator.state)
        np.savez_compressed(path, version=np.int64(1),
                            population=self.population, costs=self.costs,
                            evaluations=np.int64(self.evaluations),
                            rng_state=np.frombuffer(state.encode(), dtype=np.uint8))

    def load_checkpoint(self, path):
        d = np.load(path)
        if int(d["version"]) != 1:
            raise ValueError("unsupported checkpoint version")
        self.population = d["population"]
        self.costs = d["costs"]
        self.evaluations = int(d["evaluations"])
        state = json.loads(bytes(d["rng_state"]).decode())
        state["state"]["state"] = int(state["state"]["state"])
        state["state"]["inc"] = int(state["state"]["inc"])
        self.rng.bit_generator.state = state


def optimize_ensemble(shape, rate, K_a, budget, layout, N, **kwargs):
    """Convenience wrapper: build an EnsembleOptimizer and run it."""
    opt = EnsembleOptimizer(shape, rate, K_a, layout, N, **kwargs)
    return opt.run(budget)
