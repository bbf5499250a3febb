"""Geometry of determinant-one positive definite quadratic forms.

The space P_d of such forms on R^d models the symmetric space
SO(d)\\SL_d(R).  This module provides the form and group element types,
the right action (Q.g)(v) = Q(gv), the two distinguished singular
geodesic rays and their Busemann functions, solvable (Iwasawa)
coordinates adapted to the first ray, and the named constants used by
the counting and equidistribution drivers.

Conventions:
  * lambda = 1/sqrt((d-1)d) and mu = (d-1)*lambda are the rates of the
    diagonal geodesic flows.
  * Every QuadForm is normalized to determinant one at construction.
  * Iwasawa coordinates use G = K*A*N with N unit lower triangular; the
    solvable representative of a form is the unique lower triangular
    matrix L with positive diagonal and L^T L = gram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "GeometryError",
    "QuadForm",
    "GroupElement",
    "IwasawaCoord",
    "Constants",
    "rate_lambda",
    "rate_mu",
    "act",
    "geodesic_r",
    "geodesic_rho",
    "busemann_r",
    "busemann_rho",
    "iwasawa_decompose",
    "iwasawa_compose",
    "phi_t",
    "chi_d",
    "constants",
    "zeta",
]

SYM_TOL = 1e-12
DET_TOL = 1e-9
PIVOT_TOL = 1e-12

# vol(M_2) = 2*pi/3 in the rescaled-hyperbolic-plane normalization used
# throughout; for d >= 3 the analogous volume depends on a measure
# normalization that is never needed (all predictions are ratios).
VOL_M2 = 2.0 * math.pi / 3.0


class GeometryError(ValueError):
    """Invalid geometric input: dimension, symmetry or definiteness."""


def rate_lambda(d: int) -> float:
    """Contraction rate 1/sqrt((d-1)d) of the singular diagonal flow."""
    _check_dim(d)
    return 1.0 / math.sqrt((d - 1) * d)


def rate_mu(d: int) -> float:
    """Expansion rate (d-1)/sqrt((d-1)d) = sqrt((d-1)/d)."""
    return (d - 1) * rate_lambda(d)


def _check_dim(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise GeometryError(f"dimension must be an integer >= 2, got {d!r}")


def _cholesky_lower(m: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("matrix is not positive definite") from exc
    if np.min(np.diagonal(chol)) ** 2 <= PIVOT_TOL:
        raise GeometryError("Cholesky pivot below tolerance; matrix too close to singular")
    return chol


def _reverse_cholesky(m: np.ndarray) -> np.ndarray:
    """Lower triangular L with positive diagonal and L^T L = m."""
    flipped = m[::-1, ::-1]
    c = _cholesky_lower(flipped)
    return c.T[::-1, ::-1]


def _int_det(mat: list[list[int]]) -> int:
    """Exact integer determinant (Bareiss elimination)."""
    a = [row[:] for row in mat]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _unimodular_integer_rounding(m: np.ndarray):
    """The rounded integer matrix if m is integral within relative
    tolerance and has exact integer determinant one, else None.

    Recognizing this case exactly matters: for very eccentric integer
    grams the floating determinant carries enough noise that blind
    renormalization would perturb the entries.
    """
    r = np.rint(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    if float(np.max(np.abs(m - r))) > 1e-9 * scale:
        return None
    mint = [[int(x) for x in row] for row in r]
    if _int_det(mint) != 1:
        return None
    return mint


@dataclass(frozen=True, eq=False)
class QuadForm:
    """Positive definite quadratic form of determinant one.

    gram is the symmetric matrix of the form, chol its lower Cholesky
    factor (gram = chol @ chol.T).
    """

    dim: int
    gram: np.ndarray
    chol: np.ndarray

    @staticmethod
    def from_gram(mat) -> "QuadForm":
        m = np.array(mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GeometryError(f"gram matrix must be square, got shape {m.shape}")
        d = m.shape[0]
        _check_dim(d)
        scale = max(1.0, float(np.max(np.abs(m))))
        if float(np.max(np.abs(m - m.T))) > 1e-9 * scale:
            raise GeometryError("gram matrix is not symmetric")
        m = 0.5 * (m + m.T)
        mint = _unimodular_integer_rounding(m)
        if mint is not None:
            m = np.array(mint, dtype=float)
        else:
            det = float(np.linalg.det(m))
            if not det > 0.0:
                raise GeometryError("gram matrix is not positive definite")
            m = m / det ** (1.0 / d)
        chol = _cholesky_lower(m)
        return QuadForm(d, m, chol)

    @staticmethod
    def identity(d: int) -> "QuadForm":
        _check_dim(d)
        eye = np.eye(d)
        return QuadForm(d, eye, eye.copy())

    def evaluate(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.gram @ v)

    def solvable_rep(self) -> np.ndarray:
        """Lower triangular L, positive diagonal, with L^T L = gram."""
        return _reverse_cholesky(self.gram)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A d x d real matrix of determinant one."""

    dim: int
    mat: np.ndarray

    @staticmethod
    def from_matrix(mat) -> "GroupElement":
        m = np.array(mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GeometryError(f"matrix must be square, got shape {m.shape}")
        d = m.shape[0]
        _check_dim(d)
        det = float(np.linalg.det(m))
        if abs(det - 1.0) > DET_TOL:
            raise GeometryError(f"matrix determinant {det} is not 1 within {DET_TOL}")
        return GroupElement(d, m)

    @staticmethod
    def identity(d: int) -> "GroupElement":
        _check_dim(d)
        return GroupElement(d, np.eye(d))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if self.dim != other.dim:
            raise GeometryError("dimension mismatch in group multiplication")
        return GroupElement(self.dim, self.mat @ other.mat)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.dim, np.linalg.inv(self.mat))


@dataclass(frozen=True, eq=False)
class IwasawaCoord:
    """Solvable coordinates (t, a', n) of a form.

    t is the Busemann level along the first singular ray, aprime the
    log-diagonal of the A' block (length d-1, sums to zero; stored
    undoubled), n the strictly lower triangular part of the unit lower
    triangular factor.
    """

    t: float
    aprime: np.ndarray
    n: np.ndarray

    @property
    def dim(self) -> int:
        return self.n.shape[0]


def act(q: QuadForm, g: GroupElement) -> QuadForm:
    """Right action (Q.g)(v) = Q(gv); result renormalized to det 1."""
    if q.dim != g.dim:
        raise GeometryError(f"dimension mismatch: form {q.dim}, element {g.dim}")
    return QuadForm.from_gram(g.mat.T @ q.gram @ g.mat)


def geodesic_r(d: int, t: float) -> GroupElement:
    """diag(e^{lt/2}, ..., e^{lt/2}, e^{-mt/2}) with l,m the rates above."""
    _check_dim(d)
    lam, mu = rate_lambda(d), rate_mu(d)
    diag = [math.exp(0.5 * lam * t)] * (d - 1) + [math.exp(-0.5 * mu * t)]
    return GroupElement(d, np.diag(diag))


def geodesic_rho(d: int, t: float) -> GroupElement:
    """diag(e^{mt/2}, e^{-lt/2}, ..., e^{-lt/2})."""
    _check_dim(d)
    lam, mu = rate_lambda(d), rate_mu(d)
    diag = [math.exp(0.5 * mu * t)] + [math.exp(-0.5 * lam * t)] * (d - 1)
    return GroupElement(d, np.diag(diag))


def busemann_r(q: QuadForm) -> float:
    """Busemann function of the first ray: sqrt(d/(d-1)) * log Q(e_d)."""
    d = q.dim
    return math.sqrt(d / (d - 1)) * math.log(q.gram[d - 1, d - 1])


def busemann_rho(q: QuadForm) -> float:
    """Busemann function of the second ray: sqrt(d/(d-1)) * log det of the
    trailing (d-1) x (d-1) principal minor of the gram matrix."""
    d = q.dim
    minor = q.gram[1:, 1:]
    det = float(np.linalg.det(minor))
    if not det > 0.0:
        raise GeometryError("trailing principal minor is not positive definite")
    return math.sqrt(d / (d - 1)) * math.log(det)


def iwasawa_decompose(g) -> IwasawaCoord:
    """Solvable coordinates of SO(d).g (also accepts a QuadForm).

    The unique lower triangular representative L with L^T L = gram
    factors as a_{-t} * diag(e^{a'}, 1) * n with n unit lower triangular.
    """
    if isinstance(g, QuadForm):
        q = g
    elif isinstance(g, GroupElement):
        q = act(QuadForm.identity(g.dim), g)
    else:
        raise GeometryError(f"cannot decompose object of type {type(g)!r}")
    d = q.dim
    lam, mu = rate_lambda(d), rate_mu(d)
    lower = q.solvable_rep()
    diag = np.diagonal(lower).copy()
    t = 2.0 * math.log(diag[-1]) / mu
    aprime = np.log(diag[:-1]) + 0.5 * lam * t
    n = lower / diag[:, None]
    n = np.tril(n, k=-1)
    return IwasawaCoord(t=t, aprime=aprime, n=n)


def iwasawa_compose(coord: IwasawaCoord) -> GroupElement:
    """Inverse of iwasawa_decompose up to the SO(d) fiber."""
    d = coord.dim
    if coord.aprime.shape != (d - 1,):
        raise GeometryError("aprime length must be dim - 1")
    lam, mu = rate_lambda(d), rate_mu(d)
    diag = np.empty(d)
    diag[:-1] = np.exp(coord.aprime - 0.5 * lam * coord.t)
    diag[-1] = math.exp(0.5 * mu * coord.t)
    mat = diag[:, None] * (np.eye(d) + np.tril(coord.n, k=-1))
    return GroupElement(d, mat)


def phi_t(q: QuadForm, t: float) -> QuadForm:
    """Level shift along the first ray: pushes the level-a horosphere to
    level a + t (left multiplication by a_{-t} on the solvable rep)."""
    d = q.dim
    lower = q.solvable_rep()
    shifted = geodesic_r(d, -t).mat @ lower
    return QuadForm.from_gram(shifted.T @ shifted)


def chi_d(a: GroupElement) -> float:
    """Product of a_i/a_j over all ordered pairs j < i of diagonal entries.

    This is the Jacobian character of conjugation by a on the unit lower
    triangular group; the input must be diagonal.
    """
    m = a.mat
    d = a.dim
    off = m - np.diag(np.diagonal(m))
    if float(np.max(np.abs(off))) > 1e-12 * max(1.0, float(np.max(np.abs(m)))):
        raise GeometryError("chi_d requires a diagonal element")
    diag = np.diagonal(m)
    result = 1.0
    for i in range(d):
        for j in range(i):
            result *= diag[i] / diag[j]
    return float(result)


@lru_cache(maxsize=None)
def zeta(d: int) -> float:
    """Riemann zeta at an integer d >= 2 by direct summation.

    Partial sum of 10^6 terms plus the tail corrections
    N^{1-d}/(d-1) - N^{-d}/2 + d N^{-d-1}/12; the omitted remainder is
    O(N^{-d-3}), far below 1e-15 relative accuracy.
    """
    _check_dim(d)
    n = 1_000_000
    s = math.fsum(k ** -float(d) for k in range(1, n + 1))
    tail = n ** (1 - d) / (d - 1) - 0.5 * n ** (-d) + d * n ** (-d - 1) / 12.0
    return s + tail


@dataclass(frozen=True)
class Constants:
    """Dimension-dependent constants of the counting/equidistribution story.

    kappa_d (the horosphere-counting constant) is an absolute number only
    for d = 2 where vol(M_2) = 2*pi/3 is pinned; for d >= 3 only the ratio
    kappa_per_volume = kappa_d / vol(M_d) = omega_d / (2 zeta(d)) is
    well-defined and kappa_d is None.
    """

    d: int
    lam: float
    mu: float
    alpha: int
    omega: float
    zeta: float
    c_d: float
    kappa_d: float | None
    kappa_per_volume: float
    t_d: float
    exponent_interval: float  # L2-route rate sqrt((d-1)d)/4, holds on shrinking intervals
    exponent_pointwise: float  # all-t rate sqrt((d-1)d)/8
    exponent_edwards: float  # reference only: (1/4) sqrt(d/(d-1))
    exponent_rh: float | None  # reference only: 3 sqrt(2)/8, d = 2


@lru_cache(maxsize=None)
def constants(d: int) -> Constants:
    """All named constants for dimension d."""
    _check_dim(d)
    lam, mu = rate_lambda(d), rate_mu(d)
    alpha = 1 if d % 2 == 1 else 2
    omega = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    z = zeta(d)
    zeta_factor = 4.0 if d == 2 else 2.0
    c_d = 2.0 * math.sqrt(zeta_factor * z / (d * (d - 1) * omega))
    kappa_per_volume = omega / (2.0 * z)
    kappa_d = kappa_per_volume * VOL_M2 if d == 2 else None
    sq = math.sqrt((d - 1) * d)
    t_d = (8.0 / sq) * math.log(0.75 * sq)
    return Constants(
        d=d,
        lam=lam,
        mu=mu,
        alpha=alpha,
        omega=omega,
        zeta=z,
        c_d=c_d,
        kappa_d=kappa_d,
        kappa_per_volume=kappa_per_volume,
        t_d=t_d,
        exponent_interval=sq / 4.0,
        exponent_pointwise=sq / 8.0,
        exponent_edwards=0.25 * math.sqrt(d / (d - 1)),
        exponent_rh=3.0 * math.sqrt(2.0) / 8.0 if d == 2 else None,
    )
