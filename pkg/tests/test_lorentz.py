"""Lorentz-model primitives: frozen examples, invariants, guards."""

import math

import numpy as np
import pytest

from hyplora import (
    CurvedSpace,
    DimensionError,
    LorentzPoint,
    ManifoldError,
    TangentAtOrigin,
    exp_map_origin,
    lift_to_hyperboloid,
    llr_transform,
    log_map_origin,
    lorentz_distance,
    lorentz_inner,
)
from hyplora.lorentz import MANIFOLD_ATOL, manifold_violation

K_GRID = (0.1, 0.5, 1.0, 2.0)


def random_tangent(rng, sp, max_ratio=5.0):
    direction = rng.normal(size=sp.n)
    direction /= np.linalg.norm(direction)
    return TangentAtOrigin(direction * rng.uniform(0.0, max_ratio) * sp.sqrt_k)


class TestInnerProduct:
    def test_origin_self_inner_is_minus_k(self):
        o = CurvedSpace(1.0, 2).origin()
        assert lorentz_inner(o.full(), o.full()) == -1.0

    def test_orthogonal_space_parts(self):
        assert lorentz_inner(np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])) == 0.0

    def test_direct_evaluation(self):
        # -2*3 + 1*1 + 1*2
        assert lorentz_inner(np.array([2.0, 1.0, 1.0]), np.array([3.0, 1.0, 2.0])) == -3.0

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            u, v = rng.normal(size=(2, 5))
            assert lorentz_inner(u, v) == pytest.approx(lorentz_inner(v, u), abs=0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            lorentz_inner(np.zeros(3), np.zeros(4))


class TestLift:
    def test_zero_vector_lifts_to_origin(self):
        sp = CurvedSpace(1.0, 3)
        p = lift_to_hyperboloid(np.zeros(3), sp)
        assert p.time == 1.0
        assert np.all(p.space == 0.0)

    def test_three_four_five(self):
        p = lift_to_hyperboloid(np.array([3.0, 4.0]), CurvedSpace(1.0, 2))
        assert p.time == pytest.approx(math.sqrt(26.0), rel=1e-15)

    def test_half_curvature(self):
        p = lift_to_hyperboloid(np.array([1.0]), CurvedSpace(0.5, 1))
        assert p.time == pytest.approx(math.sqrt(1.5), rel=1e-15)

    def test_membership_by_construction(self):
        rng = np.random.default_rng(1)
        for K in K_GRID:
            sp = CurvedSpace(K, 6)
            for _ in range(200):
                space = rng.normal(size=6) * rng.uniform(0, 10.0 * sp.sqrt_k)
                p = lift_to_hyperboloid(space, sp)
                assert manifold_violation(p, sp) <= MANIFOLD_ATOL * max(1.0, K)

    def test_lift_reproduces_manifold_points_exactly(self):
        rng = np.random.default_rng(2)
        sp = CurvedSpace(0.5, 4)
        for _ in range(100):
            p = lift_to_hyperboloid(rng.normal(size=4) * 3.0, sp)
            q = lift_to_hyperboloid(p.space, sp)
            assert q.time == p.time  # bitwise: same computation


class TestExpMap:
    def test_zero_tangent_gives_origin(self):
        sp = CurvedSpace(1.0, 3)
        p = exp_map_origin(TangentAtOrigin(np.zeros(3)), sp)
        assert p.time == 1.0 and np.all(p.space == 0.0)

    def test_unit_tangent_frozen_values(self):
        p = exp_map_origin(TangentAtOrigin(np.array([1.0, 0.0])), CurvedSpace(1.0, 2))
        np.testing.assert_allclose(
            [p.time, *p.space], [math.cosh(1.0), math.sinh(1.0), 0.0], rtol=1e-15
        )

    def test_curvature_four(self):
        p = exp_map_origin(TangentAtOrigin(np.array([2.0])), CurvedSpace(4.0, 1))
        np.testing.assert_allclose(
            [p.time, p.space[0]], [2.0 * math.cosh(1.0), 2.0 * math.sinh(1.0)], rtol=1e-15
        )

    def test_membership_over_radii(self):
        rng = np.random.default_rng(3)
        for K in K_GRID:
            sp = CurvedSpace(K, 5)
            for _ in range(200):
                p = exp_map_origin(random_tangent(rng, sp), sp)
                assert manifold_violation(p, sp) <= MANIFOLD_ATOL * max(1.0, K)

    def test_small_norm_branch_is_exact(self):
        sp = CurvedSpace(1.0, 2)
        v = TangentAtOrigin(np.array([1e-12, 0.0]))
        p = exp_map_origin(v, sp)
        assert manifold_violation(p, sp) == 0.0
        assert p.space[0] == 1e-12


class TestLogMap:
    def test_log_of_origin_is_zero(self):
        sp = CurvedSpace(2.0, 3)
        v = log_map_origin(sp.origin(), sp)
        assert np.all(v.space == 0.0)

    def test_frozen_roundtrip_example(self):
        sp = CurvedSpace(1.0, 2)
        p = LorentzPoint(math.cosh(1.0), np.array([math.sinh(1.0), 0.0]))
        np.testing.assert_allclose(log_map_origin(p, sp).space, [1.0, 0.0], atol=1e-15)

    def test_lifted_point_norm(self):
        sp = CurvedSpace(1.0, 2)
        p = lift_to_hyperboloid(np.array([3.0, 4.0]), sp)
        v = log_map_origin(p, sp)
        assert v.norm() == pytest.approx(math.acosh(math.sqrt(26.0)), rel=1e-14)
        q = exp_map_origin(v, sp)
        np.testing.assert_allclose(q.space, p.space, rtol=1e-12)

    def test_roundtrips_both_ways(self):
        rng = np.random.default_rng(4)
        for K in K_GRID:
            sp = CurvedSpace(K, 4)
            for _ in range(200):
                v = random_tangent(rng, sp)
                back = log_map_origin(exp_map_origin(v, sp), sp)
                np.testing.assert_allclose(back.space, v.space, atol=1e-8, rtol=1e-8)
                p = lift_to_hyperboloid(rng.normal(size=4) * sp.sqrt_k, sp)
                again = exp_map_origin(log_map_origin(p, sp), sp)
                np.testing.assert_allclose(again.space, p.space, atol=1e-8, rtol=1e-8)
                assert abs(again.time - p.time) <= 1e-8 * max(1.0, p.time)

    def test_orthogonality_to_origin(self):
        sp = CurvedSpace(1.0, 3)
        p = lift_to_hyperboloid(np.array([1.0, -2.0, 0.5]), sp)
        v = log_map_origin(p, sp)
        assert lorentz_inner(v.full(), sp.origin().full()) == 0.0

    def test_domain_error_below_band(self):
        sp = CurvedSpace(1.0, 2)
        bad = LorentzPoint(0.5, np.zeros(2))  # time < sqrt(K): off the sheet
        with pytest.raises(ManifoldError):
            log_map_origin(bad, sp)

    def test_rounding_band_clamps(self):
        sp = CurvedSpace(1.0, 2)
        nearly = LorentzPoint(1.0 - 5e-10, np.zeros(2))
        v = log_map_origin(nearly, sp)
        assert np.all(v.space == 0.0)


class TestLLR:
    def test_rotation_fixes_origin(self):
        sp = CurvedSpace(1.0, 3)
        rng = np.random.default_rng(5)
        A = rng.normal(size=(2, 3))
        B = rng.normal(size=(3, 2))
        z = llr_transform(A, B, sp.origin(), "rotation", sp)
        assert z.time == 1.0 and np.all(z.space == 0.0)

    def test_two_stage_hand_example(self):
        sp = CurvedSpace(1.0, 2)
        p = lift_to_hyperboloid(np.array([3.0, 4.0]), sp)
        z = llr_transform(np.array([[1.0, 0.0]]), np.array([[1.0], [0.0]]), p, "rotation", sp)
        np.testing.assert_allclose([z.time, *z.space], [math.sqrt(10.0), 3.0, 0.0], rtol=1e-15)

    def test_boost_moves_origin(self):
        sp = CurvedSpace(1.0, 2)
        A = np.array([[1.0, 0.0, 0.0]])        # picks up the time coordinate
        B = np.array([[0.5, 0.5], [0.0, 0.0]])
        z = llr_transform(A, B, sp.origin(), "boost", sp)
        assert np.linalg.norm(z.space) > 0.1
        assert manifold_violation(z, sp) <= MANIFOLD_ATOL

    def test_identity_factors_reproduce_point(self):
        sp = CurvedSpace(1.0, 3)
        p = lift_to_hyperboloid(np.array([0.3, -1.0, 2.0]), sp)
        z = llr_transform(np.eye(3), np.eye(3), p, "rotation", sp)
        assert z.time == p.time and np.all(z.space == p.space)

    def test_membership_closure(self):
        rng = np.random.default_rng(6)
        for K in K_GRID:
            sp = CurvedSpace(K, 5)
            for _ in range(100):
                p = lift_to_hyperboloid(rng.normal(size=5) * sp.sqrt_k, sp)
                A = rng.normal(size=(2, 5)) / np.sqrt(5)
                B = rng.normal(size=(5, 2)) / np.sqrt(2)
                z = llr_transform(A, B, p, "rotation", sp)
                assert manifold_violation(z, sp) <= MANIFOLD_ATOL * max(1.0, K)

    def test_shape_mismatch(self):
        sp = CurvedSpace(1.0, 3)
        with pytest.raises(DimensionError):
            llr_transform(np.zeros((2, 4)), np.zeros((3, 2)), sp.origin(), "rotation", sp)
        with pytest.raises(DimensionError):
            llr_transform(np.zeros((2, 3)), np.zeros((3, 2)), sp.origin(), "boost", sp)


class TestDistance:
    def test_coincident_points(self):
        sp = CurvedSpace(1.0, 2)
        assert lorentz_distance(sp.origin(), sp.origin(), sp) == 0.0

    def test_distance_from_origin_equals_tangent_norm(self):
        rng = np.random.default_rng(7)
        for K in K_GRID:
            sp = CurvedSpace(K, 4)
            v = random_tangent(rng, sp)
            d = lorentz_distance(sp.origin(), exp_map_origin(v, sp), sp)
            assert d == pytest.approx(v.norm(), rel=1e-10, abs=1e-12)

    def test_antipodal_tangents_on_one_geodesic(self):
        sp = CurvedSpace(1.0, 2)
        v = TangentAtOrigin(np.array([1.0, 0.0]))
        minus = TangentAtOrigin(np.array([-1.0, 0.0]))
        d = lorentz_distance(exp_map_origin(v, sp), exp_map_origin(minus, sp), sp)
        assert d == pytest.approx(2.0, rel=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(8)
        sp = CurvedSpace(1.0, 3)
        for _ in range(200):
            pts = [exp_map_origin(random_tangent(rng, sp, 3.0), sp) for _ in range(3)]
            dab = lorentz_distance(pts[0], pts[1], sp)
            dbc = lorentz_distance(pts[1], pts[2], sp)
            dac = lorentz_distance(pts[0], pts[2], sp)
            assert dac <= dab + dbc + 1e-9

    def test_symmetry(self):
        rng = np.random.default_rng(9)
        sp = CurvedSpace(0.5, 3)
        p = exp_map_origin(random_tangent(rng, sp), sp)
        q = exp_map_origin(random_tangent(rng, sp), sp)
        assert lorentz_distance(p, q, sp) == lorentz_distance(q, p, sp)
