import numpy as np
import pytest
from hypothesis import given

from covfuse.errors import DimensionError, InvalidInputError
from covfuse.estimates import Estimate
from covfuse.maxdet import enclosed_triples
from covfuse.mee import (
    TAU_LIMIT, assemble, boundary_points, check_containment_geometric, check_single_enclosure_equivalence,
    check_single_enclosure_schur, contains, solve_mee,
)
from covfuse.union import gcu_direct, gcu_feasible
from covfuse.verify import random_enclosure_tuple

from conftest import estimate, seeds, two_disk_oracle


class TestAssemble:
    def test_block_layout(self):
        es = [Estimate([1.0, 0.0], [[2.0, 0.5], [0.5, 1.0]]), Estimate([-1.0, 2.0], np.eye(2))]
        mp = assemble(es, normalize_scale=False)
        p = mp.assembled
        assert p.n == 2 and p.num_constraints == 2 and p.nvars == 3 + 2 + 2
        assert all(l.size == 5 for l in p.lmis)
        assert np.allclose(mp.coordinate_shift, [0.0, 1.0]) and mp.coordinate_scale == 1.0

    def test_triples_round_trip(self):
        es = [Estimate([1.0, 0.0], [[2.0, 0.5], [0.5, 1.0]]), Estimate([-1.0, 2.0], np.eye(2))]
        mp = assemble(es, normalize_scale=False)
        for e, (Ai, b, c) in zip(es, enclosed_triples(mp.assembled)):
            a = e.mean - mp.coordinate_shift
            P = np.linalg.inv(e.cov)
            assert np.allclose(Ai, P)
            assert np.allclose(b, -P @ a)
            assert c == pytest.approx(a @ P @ a - 1.0)

    def test_normalized_scale(self):
        mp = assemble([Estimate([0.0, 0.0], np.eye(2)), Estimate([4.0, 4.0], np.eye(2))])
        assert mp.coordinate_scale == pytest.approx(np.sqrt(8.0))

    def test_rejects_empty_and_mixed(self):
        with pytest.raises(InvalidInputError):
            assemble([])
        with pytest.raises(DimensionError):
            assemble([Estimate([0.0], [[1.0]]), Estimate([0.0, 0.0], np.eye(2))])


class TestSolveMEE:
    def test_single_returns_input(self):
        e = Estimate([1.0, 2.0], [[3.0, 1.0], [1.0, 2.0]])
        r = solve_mee([e])
        assert r.estimate.allclose(e) and r.omegas.weights == (1.0,)

    def test_concentric(self):
        r = solve_mee([Estimate([0.0, 0.0], np.eye(2)), Estimate([0.0, 0.0], 4 * np.eye(2))])
        assert np.allclose(r.estimate.cov, 4 * np.eye(2), atol=1e-7)
        assert r.info["nested"] == 1

    def test_nested_shortcut_matches_solver(self):
        es = [Estimate([0.3, 0.0], 0.5 * np.eye(2)), Estimate([0.0, 0.0], [[4.0, 1.0], [1.0, 3.0]])]
        r = solve_mee(es)
        assert r.info["nested"] == 1 and r.estimate.allclose(es[1])
        direct = gcu_direct(es)
        assert direct.objective == pytest.approx(r.objective, abs=1e-6)

    def test_two_disks(self, disk_pair):
        r = solve_mee(disk_pair)
        assert r.status == "converged"
        assert np.allclose(r.estimate.mean, [2.0, 2.0], atol=1e-6)
        assert r.objective == pytest.approx(two_disk_oracle(), abs=1e-3)
        assert np.exp(r.objective) == pytest.approx(np.exp(gcu_direct(disk_pair).objective), rel=1e-4)
        assert sorted(r.active) == [0, 1]

    def test_interval_hull(self):
        r = solve_mee([Estimate([0.0], [[1.0]]), Estimate([3.0], [[1.0]])])
        assert r.estimate.mean[0] == pytest.approx(1.5, abs=1e-7)
        assert r.estimate.cov[0, 0] == pytest.approx(6.25, rel=1e-7)

    def test_inactive_constraint_excluded(self, disk_pair):
        r = solve_mee(disk_pair + [Estimate([2.0, 2.0], 0.01 * np.eye(2))])
        assert sorted(r.active) == [0, 1]
        assert np.allclose(r.estimate.mean, [2.0, 2.0], atol=1e-6)

    @given(seeds)
    def test_multipliers_and_containment(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 4))
        es = [estimate(rng, n) for _ in range(int(rng.integers(2, 5)))]
        r = solve_mee(es)
        assert r.status == "converged"
        assert max(r.info["tau"]) <= TAU_LIMIT
        assert gcu_feasible(r.estimate, es)[0]
        assert all(check_containment_geometric(r.estimate, e, 100, seed=i) for i, e in enumerate(es))
        assert r.active

    @given(seeds)
    def test_shift_invariance(self, seed):
        rng = np.random.default_rng(seed)
        es = [estimate(rng, 2) for _ in range(3)]
        c = rng.normal(size=2) * 10
        a = solve_mee(es)
        b = solve_mee([Estimate(e.mean + c, e.cov) for e in es])
        assert np.allclose(b.estimate.mean, a.estimate.mean + c, atol=1e-8 * max(1.0, np.abs(c).max()))
        assert np.allclose(b.estimate.cov, a.estimate.cov, rtol=1e-8, atol=1e-8)


class TestSingleEnclosure:
    def test_feasible_multiplier(self):
        assert check_single_enclosure_equivalence([0, 0], 4 * np.eye(2), [0.5, 0], np.eye(2), 2 / 3) == (True, True)

    def test_infeasible_multiplier(self):
        assert check_single_enclosure_equivalence([0, 0], 4 * np.eye(2), [0.5, 0], np.eye(2), 0.2) == (False, False)

    def test_endpoints_rejected(self):
        with pytest.raises(InvalidInputError):
            check_single_enclosure_equivalence([0, 0], np.eye(2), [0, 0], np.eye(2), 1.0)

    @given(seeds)
    def test_three_forms_agree(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            u, U, a, A, w = random_enclosure_tuple(rng)
            lhs, rhs = check_single_enclosure_equivalence(u, U, a, A, w)
            assert lhs == rhs == check_single_enclosure_schur(u, U, a, A, w)


class TestContainment:
    def test_nested_disks(self):
        assert contains(Estimate([0.0, 0.0], 4 * np.eye(2)), Estimate([0.5, 0.0], np.eye(2)))[0]

    def test_overlapping_disks(self):
        assert not contains(Estimate([0.0, 0.0], 4 * np.eye(2)), Estimate([1.5, 0.0], np.eye(2)))[0]

    def test_internally_tangent(self):
        assert contains(Estimate([0.0, 0.0], 4 * np.eye(2)), Estimate([1.0, 0.0], np.eye(2)))[0]

    def test_sampled_miss_reported_as_not_contained(self):
        # a sliver pokes out; sampling with few points may miss it, the exact test does not
        outer = Estimate([0.0, 0.0], np.diag([4.0, 1.0]))
        inner = Estimate([0.0, 0.0], np.diag([1.0, 1.0001]))
        assert not check_containment_geometric(outer, inner, samples=3, seed=0)

    def test_boundary_points_on_unit_level(self):
        e = Estimate([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])
        pts = boundary_points(e, 50, np.random.default_rng(0))
        d = pts - e.mean
        assert np.allclose(np.einsum("ki,ij,kj->k", d, np.linalg.inv(e.cov), d), 1.0)
