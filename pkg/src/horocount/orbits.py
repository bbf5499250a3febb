"""Orbit counting in truncated chimneys and horosphere counting in balls.

The dictionary: for a form Q and truncation level T with matching radius
R = e^{T sqrt((d-1)/d)/2}, the primitive count N1(Q, R) equals
alpha(d) * sigma(Q) * (number of orbit points of Q in the truncated
chimney), and also twice the number of horosphere lifts meeting the ball
B(Q, T).  The volume main terms give the predictions

  chimney:   sigma(Q) * count ~ (omega_d / (alpha(d) zeta(d))) e^{T sqrt((d-1)d)/2}
  horoball:            count ~ (omega_d / (2 zeta(d)))        e^{T sqrt((d-1)d)/2}

and the relative errors are fitted against the published decay exponents.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .latcount import CountingError, EllipsoidSpec, count_primitive_moebius, enumerate_points
from .quadform import QuadForm, constants

__all__ = [
    "ChimneyCount",
    "DecayFit",
    "t_of_radius",
    "radius_of_t",
    "stabilizer_order",
    "chimney_count",
    "horoball_count",
    "fit_error_exponent",
    "theory_slope",
    "sweep",
]

STABILIZER_CANDIDATE_CAP = 4096


@dataclass
class ChimneyCount:
    T: float
    R: float
    count: int
    sigma_q: int
    predicted: float
    rel_error: float


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    envelope: bool


def t_of_radius(d: int, radius: float) -> float:
    """T(R) = 2 sqrt(d/(d-1)) log R."""
    if radius <= 0:
        raise CountingError("radius must be positive")
    return 2.0 * math.sqrt(d / (d - 1)) * math.log(radius)


def radius_of_t(d: int, t: float) -> float:
    """Inverse map: R = e^{T sqrt((d-1)/d)/2}."""
    return math.exp(0.5 * t * math.sqrt((d - 1) / d))


def stabilizer_order(q: QuadForm, tol: float = 1e-7) -> int:
    """Order of the stabilizer of Q in the projectivized integer group.

    Enumerates integer matrices g with g^T M g = M by assembling columns
    from lattice vectors v with Q(v) = M_jj, then divides out the center
    (+-identity for even d).
    """
    d = q.dim
    if d not in (2, 3, 4):
        raise CountingError("stabilizer enumeration supports d in {2, 3, 4}")
    m = q.gram
    scale = float(np.max(np.abs(m)))
    candidates = []
    for j in range(d):
        target = float(m[j, j])
        pts, vals = enumerate_points(q, target + tol * scale, mode="float")
        sel = np.abs(np.asarray(vals, dtype=float) - target) <= tol * scale
        cols = pts[sel]
        if cols.shape[0] > STABILIZER_CANDIDATE_CAP:
            raise CountingError("stabilizer candidate set too large for this form")
        candidates.append(cols)

    count = 0
    cols_acc: list[np.ndarray] = []

    def extend(j):
        nonlocal count
        if j == d:
            g = np.stack(cols_acc, axis=1)
            if round(float(np.linalg.det(g))) != 1:
                return
            if float(np.max(np.abs(g.T @ m @ g - m))) <= tol * scale:
                count += 1
            return
        for cand in candidates[j]:
            ok = True
            for i in range(j):
                if abs(float(cols_acc[i] @ m @ cand) - float(m[i, j])) > tol * scale:
                    ok = False
                    break
            if ok:
                cols_acc.append(np.asarray(cand, dtype=float))
                extend(j + 1)
                cols_acc.pop()

    extend(0)
    alpha = constants(d).alpha
    if count % alpha != 0:
        raise CountingError("stabilizer enumeration inconsistent with the center")
    order = count // alpha
    if order < 1:
        raise CountingError("stabilizer enumeration failed to find the identity")
    return order


def _sigma_for(q: QuadForm, sigma: int | None) -> int:
    if sigma is not None:
        if sigma < 1:
            raise CountingError("stabilizer order must be >= 1")
        return sigma
    if q.dim <= 4:
        return stabilizer_order(q)
    warnings.warn("stabilizer order defaults to 1 for d >= 5; pass sigma explicitly "
                  "for symmetric forms", stacklevel=3)
    return 1


def chimney_count(q: QuadForm, t: float, sigma: int | None = None,
                  mode: str = "auto", threads: int = 1) -> ChimneyCount:
    """Orbit points of Q in the chimney truncated at level T.

    rel_error compares sigma(Q) * count (the stabilizer-weighted count the
    volume asymptotic speaks about) with the predicted main term.
    """
    d = q.dim
    cst = constants(d)
    radius = radius_of_t(d, t)
    sig = _sigma_for(q, sigma)
    if radius < 1e-12:
        predicted = (cst.omega / (cst.alpha * cst.zeta)) * math.exp(0.5 * t * math.sqrt((d - 1) * d))
        return ChimneyCount(T=t, R=radius, count=0, sigma_q=sig,
                            predicted=predicted, rel_error=-1.0)
    res = count_primitive_moebius(EllipsoidSpec(q, radius), mode=mode, threads=threads)
    denom = cst.alpha * sig
    if res.n1 % denom != 0:
        raise CountingError(
            f"primitive count {res.n1} not divisible by alpha*sigma = {denom}; "
            "wrong stabilizer order or boundary ambiguity")
    count = res.n1 // denom
    predicted = (cst.omega / (cst.alpha * cst.zeta)) * math.exp(0.5 * t * math.sqrt((d - 1) * d))
    rel = (res.n1 / cst.alpha) / predicted - 1.0
    return ChimneyCount(T=t, R=radius, count=count, sigma_q=sig,
                        predicted=predicted, rel_error=rel)


def horoball_count(q: QuadForm, t: float, mode: str = "auto", threads: int = 1) -> ChimneyCount:
    """Horosphere lifts meeting the ball of radius T around Q: N1 / 2."""
    d = q.dim
    cst = constants(d)
    radius = radius_of_t(d, t)
    predicted = (cst.omega / (2.0 * cst.zeta)) * math.exp(0.5 * t * math.sqrt((d - 1) * d))
    if radius < 1e-12:
        return ChimneyCount(T=t, R=radius, count=0, sigma_q=1,
                            predicted=predicted, rel_error=-1.0)
    res = count_primitive_moebius(EllipsoidSpec(q, radius), mode=mode, threads=threads)
    if res.n1 % 2 != 0:
        raise CountingError("primitive count is odd; +-v symmetry violated")
    count = res.n1 // 2
    rel = count / predicted - 1.0
    return ChimneyCount(T=t, R=radius, count=count, sigma_q=1,
                        predicted=predicted, rel_error=rel)


def theory_slope(d: int) -> float:
    """Published decay exponent (per unit T) for the counting error."""
    if d == 2:
        return -285.0 / (416.0 * math.sqrt(2.0))
    if d == 3:
        return -243.0 / (158.0 * math.sqrt(6.0))
    if d == 4:
        return -43.0 * math.sqrt(3.0) / 104.0
    if d >= 5:
        return -math.sqrt((d - 1) / d)
    raise CountingError("dimension must be >= 2")


def _envelope_indices(absvals: np.ndarray) -> np.ndarray:
    """Strict local maxima over a 3-point window (interior points only)."""
    n = len(absvals)
    idx = [i for i in range(1, n - 1)
           if absvals[i] > absvals[i - 1] and absvals[i] > absvals[i + 1]]
    return np.asarray(idx, dtype=int)


def fit_error_exponent(series, envelope: bool = False) -> DecayFit:
    """Least squares of log|rel_error| against T.

    With envelope=True only local maxima of |rel_error| enter the fit,
    which avoids the log spikes at sign changes of an oscillating error.
    """
    ts = np.asarray([p[0] for p in series], dtype=float)
    errs = np.asarray([p[1] for p in series], dtype=float)
    keep = errs != 0.0
    ts, errs = ts[keep], errs[keep]
    absvals = np.abs(errs)
    if envelope:
        idx = _envelope_indices(absvals)
        ts, absvals = ts[idx], absvals[idx]
    if len(ts) < 4:
        raise CountingError("fewer than 4 usable points; degenerate series")
    y = np.log(absvals)
    slope, intercept = np.polyfit(ts, y, 1)
    fitted = slope * ts + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(slope=float(slope), intercept=float(intercept), r2=r2,
                    n_points=len(ts), envelope=envelope)


def sweep(q: QuadForm, t_values, kind: str = "chimney", sigma: int | None = None,
          mode: str = "auto", threads: int = 1) -> list[ChimneyCount]:
    """Counts over a T-grid; grid points are independent tasks, output
    sorted by T regardless of execution order."""
    if kind == "chimney":
        sig = _sigma_for(q, sigma)
        job = lambda t: chimney_count(q, t, sigma=sig, mode=mode)
    elif kind == "horoball":
        job = lambda t: horoball_count(q, t, mode=mode)
    else:
        raise CountingError(f"unknown sweep kind {kind!r}")
    t_values = list(t_values)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, t_values))
    else:
        results = [job(t) for t in t_values]
    return sorted(results, key=lambda c: c.T)
