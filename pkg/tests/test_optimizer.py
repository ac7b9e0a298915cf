import numpy as np
import pytest

from sparse_idma.optimizer import (Candidate, EnsembleOptimizer,
                                   _project_simplex, de_generation)
from sparse_idma.txchain import FrameLayout, RepetitionDD

LAYOUT = FrameLayout(B=100, B_p=15, N_t=30000, N_p=2000)


class TestGeneration:
    def test_f_zero_mutant_is_donor(self):
        # with F=0 and CR=1 every trial equals donor x_a exactly
        rng = np.random.default_rng(0)
        pop = rng.normal(size=(5, 3))
        seen = []

        def cost(g):
            seen.append(g.copy())
            return float(np.sum(g * g))

        base_costs = [cost(g) for g in pop]
        seen.clear()
        de_generation(pop, base_costs, cost, F=0.0, CR=1.0,
                      rng=np.random.default_rng(1))
        pop_rows = {tuple(np.round(r, 12)) for r in pop}
        for trial in seen:
            assert tuple(np.round(trial, 12)) in pop_rows

    def test_greedy_selection_never_worsens(self):
        rng = np.random.default_rng(2)
        pop = rng.normal(size=(6, 4))

        def cost(g):
            return float(np.sum(g * g))

        costs = np.array([cost(g) for g in pop])
        _, new_costs = de_generation(pop, costs, cost, rng=rng)
        assert np.all(new_costs <= costs + 1e-12)

    def test_population_too_small(self):
        pop = np.zeros((3, 2))
        with pytest.raises(ValueError):
            de_generation(pop, [0, 0, 0], lambda g: 0.0)

    def test_sphere_function_converges(self):
        rng = np.random.default_rng(3)
        pop = rng.uniform(-5, 5, size=(40, 10))

        def cost(g):
            return float(np.sum(g * g))

        costs = np.array([cost(g) for g in pop])
        for _ in range(200):
            pop, costs = de_generation(pop, costs, cost, rng=rng)
        assert costs.min() < 1e-3


class TestSimplexProjection:
    def test_already_on_simplex(self):
        v = np.array([0.2, 0.3, 0.5])
        assert np.allclose(_project_simplex(v), v)

    def test_projection_properties(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            p = _project_simplex(rng.normal(0, 2, 4))
            assert p.sum() == pytest.approx(1.0)
            assert np.all(p >= 0)


@pytest.fixture
def small_opt():
    return EnsembleOptimizer((3, 6), 0.5, 25, LAYOUT, N=340, seed=0,
                             pop_size=8, optimize_nu=False,
                             fixed_nu=RepetitionDD(nu=(0.0, 1.0)),
                             threshold_resolution_db=0.5, de_max_iters=60)


class TestEnsembleOptimizer:
    def test_shape_rate_consistency(self):
        with pytest.raises(ValueError):
            EnsembleOptimizer((3, 6), 0.25, 25, LAYOUT, N=340)

    def test_decode_rounds_and_clips(self, small_opt):
        g = np.array([0.4, 1.6, 2.9, 7.0, -3.0, 1.1,
                      1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
                      1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        mat, dd = small_opt.decode(g)
        assert mat.shape == (3, 6)
        assert list(mat[0]) == [0, 2, 3, 3, 0, 1]
        assert dd is small_opt.fixed_nu

    def test_decode_nu_simplex(self):
        opt = EnsembleOptimizer((3, 6), 0.5, 25, LAYOUT, N=340, seed=0,
                                pop_size=8, optimize_nu=True, L=2)
        g = np.concatenate([np.ones(18), [0.9, 0.4]])
        _, dd = opt.decode(g)
        assert sum(dd.nu) == pytest.approx(1.0)
        assert len(dd.nu) == 2

    def test_invalid_matrix_infinite_cost(self, small_opt):
        g = np.zeros(18)  # all-zero matrix is not a valid protograph
        assert small_opt.cost(g) == np.inf

    def test_cost_cached_not_recounted(self, small_opt):
        g = np.ones(18)
        c1 = small_opt.cost(g)
        n = small_opt.evaluations
        c2 = small_opt.cost(g + 0.01)  # rounds to the same integer matrix
        assert c1 == c2
        assert small_opt.evaluations == n

    def test_budget_contract_and_validity(self, small_opt):
        best = small_opt.run(budget=small_opt.pop_size)
        assert small_opt.evaluations >= small_opt.pop_size
        assert isinstance(best, Candidate)
        assert np.isfinite(best.fitness)
        assert best.base_matrix.min() >= 0
        assert best.base_matrix.max() <= small_opt.max_edge
        # fitness is reproducible from the candidate itself
        flat = best.base_matrix.astype(np.float64).ravel()
        assert small_opt.cost(flat) == best.fitness

    def test_checkpoint_resume_deterministic(self, tmp_path):
        kw = dict(shape=(3, 6), rate=0.5, K_a=25, layout=LAYOUT, N=340,
                  seed=7, pop_size=8, optimize_nu=False,
                  fixed_nu=RepetitionDD(nu=(0.0, 1.0)),
                  threshold_resolution_db=0.5, de_max_iters=60)
        ref = EnsembleOptimizer(**kw)
        best_ref = ref.run(budget=30)

        a = EnsembleOptimizer(**kw)
        ck = tmp_path / "ck.npz"
        a._init_population()
        a.save_checkpoint(ck)
        b = EnsembleOptimizer(**kw)
        b.load_checkpoint(ck)
        best_b = b.run(budget=30)
        assert np.array_equal(best_b.base_matrix, best_ref.base_matrix)
        assert best_b.fitness == best_ref.fitness


@pytest.mark.slow
class TestBaselineDominance:
    def test_beats_all_ones_regular(self):
        from sparse_idma.density_evolution import de_threshold
        from sparse_idma.protograph import validate_protograph

        dd = RepetitionDD(nu=(0.0, 1.0))
        opt = EnsembleOptimizer((3, 6), 0.5, 25, LAYOUT, N=340, seed=1,
                                pop_size=12, optimize_nu=False, fixed_nu=dd,
                                threshold_resolution_db=0.25, de_max_iters=100)
        best = opt.run(budget=150)
        baseline = de_threshold(
            validate_protograph(np.ones((3, 6), dtype=int)), dd, LAYOUT,
            340, 25, split_ratio=1.0, resolution_db=0.25, max_iters=100)
        assert best.fitness <= baseline
