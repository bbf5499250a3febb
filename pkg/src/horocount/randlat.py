"""Random unimodular lattices and the mean-square discrepancy check.

Two samplers:

  * sample_exact_d2 draws z = x + iy from the standard fundamental domain
    {|x| <= 1/2, |z| >= 1} with density proportional to 1/y^2 (exact, via
    inverse-CDF in y on the enclosing strip plus rejection on |z| >= 1)
    and returns the unimodular basis (1/sqrt(y)) * ((1, x), (0, y)).
  * sample_walk runs a left random walk g <- exp(xi) g with Gaussian
    trace-zero increments.  Its stationary law on the quotient by the
    integer group is the invariant probability measure, so only
    integer-group-invariant observables may be consumed.  Basis matrices
    are coset representatives, not canonical forms; after every step the
    representative is reduced by a unimodular column operation purely to
    keep the matrix well conditioned (the coset is unchanged).

The discrepancy observable counts primitive lattice points in a ball and
compares with the volume main term; mean_square_check Monte Carlos its
second moment against the inequality bound 2 zeta(d)/vol(B) for d >= 3
(factor 4 for d = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .latcount import CountingError, EllipsoidSpec, count_primitive_moebius
from .quadform import GroupElement, QuadForm, constants

__all__ = [
    "LatticeSample",
    "MeanSquareReport",
    "sample_exact_d2",
    "sample_walk",
    "discrepancy",
    "mean_square_check",
    "fundamental_domain_im_cdf",
]

Y_MIN = math.sqrt(3.0) / 2.0
FUNDAMENTAL_AREA = math.pi / 3.0  # hyperbolic area of {|x|<=1/2, |z|>=1}


@dataclass(frozen=True, eq=False)
class LatticeSample:
    basis: GroupElement  # columns span the lattice
    origin_tag: str
    weight: float = 1.0


@dataclass
class MeanSquareReport:
    d: int
    radius: float
    n_samples: int
    mean_d2: float
    std_error: float
    bound: float
    passed: bool
    degenerate: bool = False
    mean_e1sq: float = 0.0
    bound_e1sq: float = 0.0


def sample_exact_d2(rng: np.random.Generator, n: int) -> list[LatticeSample]:
    """n exact samples from the normalized hyperbolic measure on the
    modular fundamental domain, returned as unimodular bases."""
    if n < 1:
        raise CountingError("need at least one sample")
    out = []
    while len(out) < n:
        m = max(n - len(out), 16)
        x = rng.uniform(-0.5, 0.5, size=m)
        y = Y_MIN / (1.0 - rng.random(size=m))
        keep = x * x + y * y >= 1.0
        for xi, yi in zip(x[keep], y[keep]):
            if len(out) >= n:
                break
            s = 1.0 / math.sqrt(yi)
            basis = GroupElement(2, np.array([[s, s * xi], [0.0, s * yi]]))
            out.append(LatticeSample(basis=basis, origin_tag="exact-d2"))
    return out


def fundamental_domain_im_cdf(y: float) -> float:
    """CDF of Im z under the normalized hyperbolic measure on the domain.

    Width at height v is 1 - 2 sqrt(1 - v^2) for v <= 1 and 1 above, and
    integrating width/v^2 gives the closed form used here.
    """
    if y <= Y_MIN:
        return 0.0

    def low_part(v):
        # integral of (1 - 2 sqrt(1 - u^2))/u^2 from Y_MIN to v
        def anti(u):
            return -1.0 / u + 2.0 * (math.sqrt(1.0 - u * u) / u + math.asin(u))
        return anti(v) - anti(Y_MIN)

    if y <= 1.0:
        mass = low_part(y)
    else:
        mass = low_part(1.0) + (1.0 - 1.0 / y)
    return mass / FUNDAMENTAL_AREA


def _lll_unimodular(basis: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Column LLL reduction; returns the reduced basis of the same lattice
    with determinant of the applied transform forced to +1."""
    b = basis.copy()
    d = b.shape[1]
    u = np.eye(d, dtype=np.int64)

    def gso(mat):
        q, r = np.linalg.qr(mat)
        return r

    k = 1
    guard = 0
    while k < d and guard < 10_000:
        guard += 1
        r = gso(b)
        for j in range(k - 1, -1, -1):
            mu = r[j, k] / r[j, j]
            if abs(mu) > 0.5:
                q = round(mu)
                b[:, k] -= q * b[:, j]
                u[:, k] -= q * u[:, j]
                r = gso(b)
        if r[k, k] ** 2 >= (delta - (r[k - 1, k] / r[k - 1, k - 1]) ** 2) * r[k - 1, k - 1] ** 2:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            k = max(k - 1, 1)
    if round(float(np.linalg.det(u.astype(float)))) == -1:
        b[:, 0] = -b[:, 0]
    return b


def sample_walk(rng: np.random.Generator, d: int, step_sigma: float = 0.5,
                burn_in: int = 200, thin: int = 10, n: int = 100) -> list[LatticeSample]:
    """Random-walk samples of unimodular lattices in dimension d."""
    if d < 2:
        raise CountingError("dimension must be >= 2")
    if not 0.0 < step_sigma <= 2.0:
        raise CountingError("step_sigma must lie in (0, 2]")
    if burn_in < 100:
        raise CountingError("burn_in must be >= 100")
    if thin < 1 or n < 1:
        raise CountingError("thin and n must be >= 1")
    g = np.eye(d)
    out = []
    total = burn_in + thin * n
    for step in range(total):
        xi = step_sigma * rng.standard_normal((d, d))
        xi -= np.trace(xi) / d * np.eye(d)
        g = expm(xi) @ g
        g = _lll_unimodular(g)
        det = float(np.linalg.det(g))
        g = g / abs(det) ** (1.0 / d)
        if step >= burn_in and (step - burn_in) % thin == thin - 1:
            out.append(LatticeSample(basis=GroupElement(d, g.copy()),
                                     origin_tag=f"walk-d{d}"))
    return out


def discrepancy(sample: LatticeSample, radius: float, mode: str = "auto") -> float:
    """|zeta(d) * #(primitive lattice points in B_R) / vol(B_R) - 1|."""
    if radius <= 0:
        raise CountingError("radius must be positive")
    g = sample.basis.mat
    d = sample.basis.dim
    form = QuadForm.from_gram(g.T @ g)
    res = count_primitive_moebius(EllipsoidSpec(form, radius), mode=mode)
    cst = constants(d)
    vol = cst.omega * radius ** d
    return abs(cst.zeta * res.n1 / vol - 1.0)


def mean_square_check(d: int, radius: float, n_samples: int,
                      sampler: str = "exact", seed: int = 0,
                      step_sigma: float = 0.5, burn_in: int = 200,
                      thin: int = 10) -> MeanSquareReport:
    """Monte Carlo of the mean squared discrepancy against the bound.

    passed means mean - 2 * standard_error <= bound; with a single sample
    the standard error is undefined and the report is flagged degenerate.
    """
    rng = np.random.default_rng(seed)
    if sampler == "exact":
        if d != 2:
            raise CountingError("the exact sampler is only available for d = 2")
        samples = sample_exact_d2(rng, n_samples)
    elif sampler == "walk":
        samples = sample_walk(rng, d, step_sigma=step_sigma, burn_in=burn_in,
                              thin=thin, n=n_samples)
    else:
        raise CountingError(f"unknown sampler {sampler!r}")
    dsq = np.array([discrepancy(s, radius) ** 2 for s in samples])
    mean = float(np.mean(dsq))
    cst = constants(d)
    vol = cst.omega * radius ** d
    factor = 4.0 if d == 2 else 2.0
    bound = factor * cst.zeta / vol
    degenerate = len(dsq) < 2
    se = 0.0 if degenerate else float(np.std(dsq, ddof=1) / math.sqrt(len(dsq)))
    passed = bool(mean - 2.0 * se <= bound) and not degenerate
    e1_factor = (vol / cst.zeta) ** 2
    return MeanSquareReport(
        d=d, radius=radius, n_samples=len(dsq), mean_d2=mean, std_error=se,
        bound=bound, passed=passed, degenerate=degenerate,
        mean_e1sq=mean * e1_factor, bound_e1sq=bound * e1_factor,
    )
