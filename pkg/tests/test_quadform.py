import math

import numpy as np
import pytest
from scipy.special import zeta as scipy_zeta

from horocount.quadform import (
    Constants,
    GeometryError,
    GroupElement,
    IwasawaCoord,
    QuadForm,
    act,
    busemann_r,
    busemann_rho,
    chi_d,
    constants,
    geodesic_r,
    geodesic_rho,
    iwasawa_compose,
    iwasawa_decompose,
    phi_t,
    rate_lambda,
    rate_mu,
    zeta,
)


def random_group_element(rng, d, scale=0.4):
    m = np.eye(d) + scale * rng.standard_normal((d, d))
    det = np.linalg.det(m)
    if det < 0:
        m[:, 0] = -m[:, 0]
        det = -det
    return GroupElement.from_matrix(m / det ** (1.0 / d))


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return GroupElement.from_matrix(q)


class TestQuadForm:
    def test_normalized_to_det_one(self):
        q = QuadForm.from_gram([[4.0, 0.0], [0.0, 4.0]])
        assert np.linalg.det(q.gram) == pytest.approx(1.0, abs=1e-9)

    def test_cholesky_consistency(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g = random_group_element(rng, 3)
            q = act(QuadForm.identity(3), g)
            assert np.allclose(q.chol @ q.chol.T, q.gram, atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(GeometryError):
            QuadForm.from_gram([[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_indefinite(self):
        with pytest.raises(GeometryError):
            QuadForm.from_gram([[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_dim_one(self):
        with pytest.raises(GeometryError):
            QuadForm.from_gram([[2.0]])

    def test_solvable_rep(self):
        rng = np.random.default_rng(1)
        for d in (2, 3, 4):
            q = act(QuadForm.identity(d), random_group_element(rng, d))
            low = q.solvable_rep()
            assert np.allclose(np.triu(low, 1), 0.0)
            assert np.all(np.diagonal(low) > 0)
            assert np.allclose(low.T @ low, q.gram, atol=1e-12)


class TestAction:
    def test_identity(self):
        q0 = QuadForm.identity(3)
        out = act(q0, GroupElement.identity(3))
        assert np.allclose(out.gram, q0.gram)

    def test_geodesic_gram(self):
        # gram of Q0 . a_t is diag(e^{lt}, ..., e^{lt}, e^{-mt})
        for d in (2, 3, 5):
            t = 1.7
            out = act(QuadForm.identity(d), geodesic_r(d, t))
            lam, mu = rate_lambda(d), rate_mu(d)
            expected = [math.exp(lam * t)] * (d - 1) + [math.exp(-mu * t)]
            assert np.allclose(np.diagonal(out.gram), expected, rtol=1e-12)

    def test_shear_gram_d2(self):
        x = 0.73
        out = act(QuadForm.identity(2), GroupElement.from_matrix([[1.0, 0.0], [x, 1.0]]))
        assert np.allclose(out.gram, [[1 + x * x, x], [x, 1.0]], atol=1e-12)

    def test_right_action(self):
        rng = np.random.default_rng(2)
        for d in (2, 3):
            for _ in range(10):
                q = act(QuadForm.identity(d), random_group_element(rng, d))
                g = random_group_element(rng, d)
                h = random_group_element(rng, d)
                lhs = act(act(q, g), h)
                rhs = act(q, g @ h)
                assert np.allclose(lhs.gram, rhs.gram, atol=1e-9)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        for d in (2, 3, 4):
            for _ in range(5):
                k = random_rotation(rng, d)
                out = act(QuadForm.identity(d), k)
                assert np.allclose(out.gram, np.eye(d), atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(GeometryError):
            act(QuadForm.identity(2), GroupElement.identity(3))


class TestGeodesics:
    def test_at_zero_is_identity(self):
        for d in (2, 3, 4):
            assert np.allclose(geodesic_r(d, 0.0).mat, np.eye(d))
            assert np.allclose(geodesic_rho(d, 0.0).mat, np.eye(d))

    def test_d2_values(self):
        a1 = geodesic_r(2, 1.0)
        e = math.exp(1.0 / (2.0 * math.sqrt(2.0)))
        assert np.allclose(np.diagonal(a1.mat), [e, 1.0 / e], rtol=1e-14)

    def test_determinant_one(self):
        for d in (2, 3, 7):
            for t in (-5.0, 1.3, 5.0):
                assert np.linalg.det(geodesic_rho(d, t).mat) == pytest.approx(1.0, abs=1e-9)
                assert np.linalg.det(geodesic_r(d, t).mat) == pytest.approx(1.0, abs=1e-9)


class TestBusemann:
    def test_along_own_ray(self):
        for d in (2, 3, 4):
            for t in np.linspace(-10, 10, 11):
                q = act(QuadForm.identity(d), geodesic_r(d, float(t)))
                assert busemann_r(q) == pytest.approx(-t, abs=1e-12)
                p = act(QuadForm.identity(d), geodesic_rho(d, float(t)))
                assert busemann_rho(p) == pytest.approx(-t, abs=1e-12)

    def test_at_basepoint(self):
        assert busemann_r(QuadForm.identity(2)) == 0.0
        assert busemann_rho(QuadForm.identity(3)) == pytest.approx(0.0, abs=1e-12)

    def test_explicit_values(self):
        q = QuadForm.from_gram([[2.0, 0.0], [0.0, 0.5]])
        assert busemann_r(q) == pytest.approx(math.sqrt(2.0) * math.log(0.5), rel=1e-12)
        p = QuadForm.from_gram(np.diag([4.0, 1.0, 0.25]))
        assert busemann_rho(p) == pytest.approx(math.sqrt(1.5) * math.log(0.25), rel=1e-12)

    def test_cocycle(self):
        rng = np.random.default_rng(4)
        for d in (2, 3):
            q = act(QuadForm.identity(d), random_group_element(rng, d))
            for s in (0.7, -2.2):
                shifted = act(q, geodesic_r(d, s))
                assert busemann_r(shifted) == pytest.approx(busemann_r(q) - s, abs=1e-9)


class TestIwasawa:
    def test_identity(self):
        coord = iwasawa_decompose(GroupElement.identity(3))
        assert coord.t == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(coord.aprime, 0.0, atol=1e-12)
        assert np.allclose(coord.n, 0.0, atol=1e-12)

    def test_compose_trivial_is_geodesic(self):
        for d in (2, 3):
            t = 1.3
            coord = IwasawaCoord(t=t, aprime=np.zeros(d - 1), n=np.zeros((d, d)))
            g = iwasawa_compose(coord)
            assert np.allclose(g.mat, geodesic_r(d, -t).mat, atol=1e-12)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(5)
        for d in (2, 3, 4):
            for _ in range(34):
                g = random_group_element(rng, d)
                coord = iwasawa_decompose(g)
                assert abs(float(np.sum(coord.aprime))) < 1e-12
                back = iwasawa_compose(coord)
                lhs = act(QuadForm.identity(d), back).gram
                rhs = act(QuadForm.identity(d), g).gram
                assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_coordinate_roundtrip(self):
        rng = np.random.default_rng(8)
        for d in (2, 3, 4):
            for _ in range(10):
                afree = 0.5 * rng.standard_normal(d - 1)
                aprime = afree - afree.mean()
                n = np.zeros((d, d))
                n[np.tril_indices(d, -1)] = rng.standard_normal(d * (d - 1) // 2)
                coord = IwasawaCoord(t=float(rng.normal()), aprime=aprime, n=n)
                back = iwasawa_decompose(iwasawa_compose(coord))
                assert back.t == pytest.approx(coord.t, abs=1e-9)
                assert np.allclose(back.aprime, coord.aprime, atol=1e-9)
                assert np.allclose(back.n, coord.n, atol=1e-9)


class TestPhiT:
    def test_fixes_at_zero(self):
        q0 = QuadForm.identity(2)
        assert np.allclose(phi_t(q0, 0.0).gram, q0.gram, atol=1e-12)

    def test_level_shift(self):
        rng = np.random.default_rng(6)
        for d in (2, 3):
            # points on the level-zero horosphere: unit lower triangular shear
            n = np.eye(d)
            n[np.tril_indices(d, -1)] = 0.3 * rng.standard_normal(d * (d - 1) // 2)
            q = act(QuadForm.identity(d), GroupElement.from_matrix(n))
            assert busemann_r(q) == pytest.approx(0.0, abs=1e-9)
            for t in (0.9, 3.0, -1.4):
                assert busemann_r(phi_t(q, t)) == pytest.approx(t, abs=1e-9)

    def test_d2_corner_entry(self):
        q = act(QuadForm.identity(2), GroupElement.from_matrix([[1.0, 0.0], [0.4, 1.0]]))
        t = 2.0
        out = phi_t(q, t)
        assert out.gram[1, 1] == pytest.approx(math.exp(t / math.sqrt(2.0)), rel=1e-12)


class TestChi:
    def test_identity(self):
        assert chi_d(GroupElement.identity(4)) == 1.0

    def test_geodesic_value(self):
        for d in (2, 3, 4, 5, 6):
            sq = math.sqrt((d - 1) * d)
            for t in (0.5, 1.0, 3.7):
                assert chi_d(geodesic_r(d, -t)) == pytest.approx(math.exp(0.5 * t * sq), rel=1e-12)
        assert chi_d(geodesic_r(2, -1.0)) == pytest.approx(2.0281149816, rel=1e-9)

    def test_multiplicative(self):
        rng = np.random.default_rng(7)
        for d in (2, 3, 4):
            e = np.exp(rng.standard_normal(d))
            f = np.exp(rng.standard_normal(d))
            a = GroupElement(d, np.diag(e))
            b = GroupElement(d, np.diag(f))
            ab = GroupElement(d, np.diag(e * f))
            assert chi_d(ab) == pytest.approx(chi_d(a) * chi_d(b), rel=1e-12)

    def test_rejects_nondiagonal(self):
        with pytest.raises(GeometryError):
            chi_d(GroupElement.from_matrix([[1.0, 0.4], [0.0, 1.0]]))


class TestConstants:
    def test_rates(self):
        for d in (2, 3, 4, 9):
            c = constants(d)
            assert c.lam == pytest.approx(1.0 / math.sqrt((d - 1) * d), rel=1e-15)
            assert c.mu == pytest.approx((d - 1) * c.lam, rel=1e-15)

    def test_alpha_parity(self):
        assert constants(2).alpha == 2
        assert constants(3).alpha == 1
        assert constants(4).alpha == 2
        assert constants(5).alpha == 1

    def test_zeta_against_scipy(self):
        for d in (2, 3, 4, 6):
            assert zeta(d) == pytest.approx(float(scipy_zeta(d)), rel=1e-14)

    def test_c2(self):
        assert constants(2).c_d == pytest.approx(2.0 * math.sqrt(math.pi / 3.0), rel=1e-12)

    def test_c3_uses_factor_two(self):
        c = constants(3)
        expected = 2.0 * math.sqrt(2.0 * c.zeta / (6.0 * c.omega))
        assert c.c_d == pytest.approx(expected, rel=1e-12)

    def test_kappa2(self):
        c = constants(2)
        assert c.kappa_d == pytest.approx(2.0, abs=1e-12)
        # cross-check: alpha/sqrt((d-1)d) * vol of the level-zero fiber piece
        assert c.kappa_d == pytest.approx(2.0 / math.sqrt(2.0) * math.sqrt(2.0), abs=1e-12)
        assert c.kappa_per_volume == pytest.approx(3.0 / math.pi, rel=1e-12)
        assert constants(3).kappa_d is None

    def test_t2(self):
        expected = (8.0 / math.sqrt(2.0)) * math.log(0.75 * math.sqrt(2.0))
        c = constants(2)
        assert c.t_d == pytest.approx(expected, rel=1e-15)
        assert c.t_d == pytest.approx(0.333141, abs=1e-5)

    def test_exponents(self):
        c = constants(2)
        assert c.exponent_interval == pytest.approx(math.sqrt(2.0) / 4.0, rel=1e-15)
        assert c.exponent_pointwise == pytest.approx(math.sqrt(2.0) / 8.0, rel=1e-15)
        assert c.exponent_edwards == pytest.approx(0.25 * math.sqrt(2.0), rel=1e-15)
        assert c.exponent_rh == pytest.approx(3.0 * math.sqrt(2.0) / 8.0, rel=1e-15)
        assert constants(3).exponent_rh is None
        assert constants(3).exponent_edwards == pytest.approx(0.25 * math.sqrt(1.5), rel=1e-15)

    def test_rejects_small_dim(self):
        with pytest.raises(GeometryError):
            constants(1)
