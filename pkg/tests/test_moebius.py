import math

import numpy as np
import pytest

from horocount.latcount import CountingError, EllipsoidSpec
from horocount.moebius import (
    error_relation_check,
    mu_tail,
    sieve,
    verify_inversion,
    zeta_tail,
)
from horocount.quadform import GroupElement, QuadForm, act, zeta


def mu_by_factorization(n):
    out = 1
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            out = -out
        p += 1
    if m > 1:
        out = -out
    return out


class TestSieve:
    def test_first_values(self):
        table = sieve(10)
        assert list(table.mu[1:11]) == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]

    def test_square_factor(self):
        assert sieve(10).mu[4] == 0

    def test_against_factorization(self):
        table = sieve(1000)
        for k in range(1, 1001):
            assert int(table.mu[k]) == mu_by_factorization(k), k

    def test_mertens(self):
        table = sieve(100)
        assert table.mertens(100) == sum(mu_by_factorization(k) for k in range(1, 101))
        assert table.mertens(100) == 1

    def test_rejects_zero(self):
        with pytest.raises(CountingError):
            sieve(0)

    def test_dirichlet_inverse(self):
        # tau = indicator of squares, nu(k^2) = mu(k): tau * nu = delta_1
        n_max = 10_000
        table = sieve(int(math.isqrt(n_max)) + 1)

        def tau(n):
            r = math.isqrt(n)
            return 1 if r * r == n else 0

        def nu(n):
            r = math.isqrt(n)
            return int(table.mu[r]) if r * r == n else 0

        rng = np.random.default_rng(21)
        probes = list(rng.integers(2, n_max, size=60)) + [1, 4, 36, 9973]
        for n in probes:
            n = int(n)
            conv = sum(tau(k) * nu(n // k) for k in range(1, n + 1) if n % k == 0)
            assert conv == (1 if n == 1 else 0), n


class TestInversion:
    def test_d2_identity(self):
        rep = verify_inversion(EllipsoidSpec(QuadForm.identity(2), 5.0))
        assert rep.ok and rep.levels_checked == 25

    def test_d3_identity(self):
        rep = verify_inversion(EllipsoidSpec(QuadForm.identity(3), 4.0))
        assert rep.ok and rep.levels_checked == 16

    def test_skew_integer_form(self):
        q = act(QuadForm.identity(2), GroupElement.from_matrix([[3, 1], [2, 1]]))
        assert verify_inversion(EllipsoidSpec(q, 10.0)).ok

    def test_single_term_level(self):
        # at the lowest level the identity is a single term r1 = r0
        q = QuadForm.identity(2)
        from horocount.latcount import shell_counts
        r0, r1 = shell_counts(EllipsoidSpec(q, 1.0), [1.0])
        assert r1[0] == r0[0] == 4

    def test_rejects_float_gram(self):
        q = QuadForm.from_gram([[1.3, 0.1], [0.1, 1.0]])
        with pytest.raises(CountingError):
            verify_inversion(EllipsoidSpec(q, 3.0))

    def test_synthetic_roundtrip(self):
        # random primitive shells pushed to full shells and recovered exactly
        rng = np.random.default_rng(22)
        top = 200
        r1 = rng.integers(0, 30, size=top + 1).astype(int)
        r1[0] = 0
        r0 = np.zeros(top + 1, dtype=int)
        for x in range(1, top + 1):
            r0[x] = sum(r1[x // (k * k)] for k in range(1, math.isqrt(x) + 1)
                        if x % (k * k) == 0)
        table = sieve(math.isqrt(top) + 1)
        for x in range(1, top + 1):
            rec = sum(int(table.mu[k]) * int(r0[x // (k * k)])
                      for k in range(1, math.isqrt(x) + 1) if x % (k * k) == 0)
            assert rec == r1[x]


class TestErrorRelation:
    def test_d2_example(self):
        rep = error_relation_check(EllipsoidSpec(QuadForm.identity(2), 2.0))
        assert rep.ok
        assert rep.details["e1"] == pytest.approx(8.0 - 24.0 / math.pi, rel=1e-12)
        assert rep.residual_primitive_from_full < 1e-6
        assert rep.residual_full_from_primitive < 1e-6

    def test_d3(self):
        rep = error_relation_check(EllipsoidSpec(QuadForm.identity(3), 3.0))
        assert rep.ok
        assert rep.residual_primitive_from_full < 1e-6

    def test_small_radius_reduces_to_tails(self):
        rep = error_relation_check(EllipsoidSpec(QuadForm.identity(2), 0.5))
        assert rep.ok
        assert rep.residual_primitive_from_full < 1e-9
        assert rep.residual_full_from_primitive < 1e-9


class TestTails:
    def test_zeta_tail_matches_zeta(self):
        for d in (2, 3):
            for r in (0.5, 2.0, 17.0):
                val, width = zeta_tail(d, r)
                partial = sum(k ** -float(d) for k in range(1, math.floor(r) + 1))
                assert val == pytest.approx(zeta(d) - partial, abs=1e-12 + width)

    def test_mu_tail_complement(self):
        # sum_{k<=r} mu(k)/k^d + tail = 1/zeta(d)
        table = sieve(100)
        for d in (2, 3):
            for r in (1.0, 7.0, 40.0):
                head = sum(int(table.mu[k]) * k ** -float(d)
                           for k in range(1, math.floor(r) + 1))
                tail, width = mu_tail(d, r)
                assert head + tail == pytest.approx(1.0 / zeta(d), abs=1e-7)
