"""Deciding whether f(x, t) is rational in x with x-constant coefficients.

The functions (x^m f, ..., x f, f, x^m, ..., 1) are linearly dependent over
constants exactly when f = a(x)/b(x) with deg a, deg b <= m, and dependence
is read off their Wronskian.  Swapping x^i for (x - x0)^i is a unimodular
change of basis, so at x0 the Wronskian matrix becomes the matrix of Taylor
coefficients: shifted copies of (c_0, c_1, ...) next to unit columns.  The
vanishing test runs on that matrix after rescaling x - x0 by an estimated
radius and normalizing columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import Line, Path, _monodromy_at, integrate_along
from .errors import InconsistentSamples
from .jets import Jet, taylor_of
from .param_algebra import as_point, complex_to_json

WRONSKIAN_TOL = 1e-8
VERIFY_TOL = 1e-8
REDRAWS = 3
DEFAULT_M_MAX = 8
FD_T_STEP = 1e-5


class SampledFunction:
    """f(x, t) with Taylor coefficients in x on demand.

    ``value(x, t)`` returns f; ``taylor(x0, t, K)`` returns c_0..c_{K-1} of
    f(x0 + h, t).
    """

    def __init__(self, value, taylor, label: str = ""):
        self._value = value
        self._taylor = taylor
        self.label = label

    @classmethod
    def from_callable(cls, f, label: str = ""):
        """f(x, t) built from arithmetic and the helpers in ``jets``."""
        return cls(lambda x, t: complex(f(complex(x), t)), lambda x0, t, K: taylor_of(f, x0, K, t), label)

    @classmethod
    def from_series(cls, coeffs, center=0.0, label: str = ""):
        """Polynomial sum_k c_k(t) (x - center)^k; ``coeffs`` is a list or a callable of t."""

        def cs(t):
            return np.asarray(coeffs(t) if callable(coeffs) else coeffs, dtype=complex)

        def f(x, t):
            c = cs(t)
            u = x - center
            acc = 0 * u + c[-1]
            for ck in c[-2::-1]:
                acc = acc * u + ck
            return acc

        return cls.from_callable(f, label)

    def value(self, x, t) -> complex:
        return self._value(x, t)

    def taylor(self, x0, t, K: int) -> np.ndarray:
        return np.asarray(self._taylor(x0, t, K), dtype=complex)

    def derivatives(self, x0, t, K: int) -> np.ndarray:
        c = self.taylor(x0, t, K)
        return c * np.array([math.factorial(k) for k in range(K)], dtype=float)

    def spot_check(self, x0, t, h: float = 1e-4) -> float:
        """Relative mismatch between f' and a central difference of f."""
        d = self.derivatives(x0, t, 2)[1]
        fd = (self.value(x0 + h, t) - self.value(x0 - h, t)) / (2 * h)
        return abs(d - fd) / max(1.0, abs(d))


def _as_sampled(f):
    if isinstance(f, SampledFunction):
        return f
    if callable(f):
        return SampledFunction.from_callable(f)
    raise TypeError("expected a SampledFunction or a callable f(x, t)")


def wronskian(functions, x, t=None) -> complex:
    """det[d^k f_j / dx^k] for k = 0..len(functions)-1."""
    fs = [_as_sampled(f) for f in functions]
    k = len(fs)
    W = np.array([f.derivatives(x, t, k) for f in fs])
    return complex(np.linalg.det(W))


def _radius_estimate(c) -> float:
    """Scale rho making c_k rho^k roughly level (log-linear fit)."""
    k = np.arange(1, c.size)
    mag = np.abs(c[1:])
    keep = mag > 1e-300
    if keep.sum() < 3:
        return 1.0
    slope = np.polyfit(k[keep], np.log(mag[keep]), 1)[0]
    return float(min(1e3, max(1e-3, math.exp(-slope))))


def wronskian_ratio(c, m: int, rho: float | None = None) -> float:
    """sigma_min / sigma_max of the scaled Taylor form of the degree-m Wronskian.

    ``c`` needs at least 2m + 2 Taylor coefficients of f at the sample point.
    """
    c = np.asarray(c, dtype=complex)
    K = 2 * m + 2
    if rho is None:
        rho = _radius_estimate(c)
    ct = c[:K] * rho ** np.arange(K)
    W = np.zeros((K, K), dtype=complex)
    for j in range(m + 1):
        W[j:, j] = ct[: K - j]
        W[j, m + 1 + j] = 1.0
    norms = np.linalg.norm(W, axis=0)
    norms[norms == 0] = 1.0
    s = np.linalg.svd(W / norms, compute_uv=False)
    return float(s[-1] / s[0])


def _annulus(rng, count, center=0.0, r_in=0.3, r_out=1.0):
    r = rng.uniform(r_in, r_out, count)
    th = rng.uniform(0, 2 * np.pi, count)
    return center + r * np.exp(1j * th)


def _fit_coefficients(f: SampledFunction, t, m: int, rng, center: complex, radius: float):
    """Null vector of [w^i, -f w^i] at points of a circle, w = (x - c)/R."""
    K = 4 * m + 8
    th = rng.uniform(0, 2 * np.pi) + 2 * np.pi * np.arange(K) / K
    rr = radius * rng.uniform(0.6, 1.0)
    xs = center + rr * np.exp(1j * th)
    w = (xs - center) / radius
    fv = np.array([f.value(x, t) for x in xs])
    V = w[:, None] ** np.arange(m + 1)[None, :]
    rows = np.hstack([V, -fv[:, None] * V]) / np.maximum(1.0, np.abs(fv))[:, None]
    _, _, vh = np.linalg.svd(rows)
    v = vh[-1].conj()
    a_w, b_w = v[: m + 1], v[m + 1 :]
    # back to powers of x: w^i = sum_k C(i,k) x^k (-c)^(i-k) / R^i
    T = np.zeros((m + 1, m + 1), dtype=complex)
    for i in range(m + 1):
        for k in range(i + 1):
            T[k, i] = math.comb(i, k) * (-center) ** (i - k) / radius**i
    a, b = T @ a_w, T @ b_w
    nz = np.flatnonzero(np.abs(b) > 1e-8 * np.max(np.abs(b)))
    lead = b[nz[-1]]
    return a / lead, b / lead


def _verify(f, t, a, b, rng, center, radius, count=10):
    worst = 0.0
    done = 0
    tries = 0
    while done < count and tries < 20 * count:
        tries += 1
        x = _annulus(rng, 1, center, 0.2 * radius, 1.2 * radius)[0]
        bx = np.polyval(b[::-1], x)
        if abs(bx) <= 1e-6 * np.max(np.abs(b)) * max(1.0, abs(x)) ** (b.size - 1):
            continue
        try:
            fx = f.value(x, t)
        except (ZeroDivisionError, FloatingPointError):
            continue
        if not np.isfinite(fx):
            continue
        err = abs(np.polyval(a[::-1], x) / bx - fx) / max(1.0, abs(fx))
        worst = max(worst, err)
        done += 1
    return worst


@dataclass
class RationalityVerdict:
    rational: bool
    m: int | None
    m_max: int
    grid: list
    coefficients: list = field(default_factory=list)  # per grid point (a, b), powers of x
    residuals: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)  # m -> smallest Wronskian ratio seen

    def to_json(self):
        return {
            "rational": self.rational,
            "m": self.m,
            "mMax": self.m_max,
            "coefficients": [
                {"t": [complex_to_json(c) for c in t], "a": [complex_to_json(v) for v in a],
                 "b": [complex_to_json(v) for v in b]}
                for t, (a, b) in zip(self.grid, self.coefficients)
            ],
            "residuals": self.residuals,
            "wronskianRatios": {str(k): v for k, v in self.ratios.items()},
        }

    def __repr__(self):
        if self.rational:
            return f"Rational(m={self.m})"
        return f"NotRationalUpTo({self.m_max})"


def detect_rational_in_x(f, m_max: int = DEFAULT_M_MAX, grid=((0.0,),), seed: int = 0, center: complex = 0.0,
                         radius: float = 1.0, points: int = 3) -> RationalityVerdict:
    """Smallest m <= m_max with a vanishing Wronskian at every test point.

    Test points lie in the annulus 0.3R <= |x - center| <= R.  On success
    a(x), b(x) are fitted per grid point (b monic in its leading nonzero
    coefficient) and checked at 10 fresh points; failing that three times
    raises InconsistentSamples.
    """
    f = _as_sampled(f)
    grid = [as_point(t) for t in grid]
    rng = np.random.default_rng(seed)
    verdict = RationalityVerdict(False, None, m_max, grid)
    x0s = {g: _annulus(rng, points, center, 0.3 * radius, radius) for g in range(len(grid))}
    for m in range(m_max + 1):
        K = max(2 * m + 2, 12)
        worst = 0.0
        vanishes = True
        for g, t in enumerate(grid):
            for x0 in x0s[g]:
                ratio = wronskian_ratio(f.taylor(x0, t, K), m)
                worst = max(worst, ratio)
                if ratio > WRONSKIAN_TOL:
                    vanishes = False
                    break
            if not vanishes:
                break
        verdict.ratios[m] = worst
        if not vanishes:
            continue
        for t in grid:
            for attempt in range(REDRAWS):
                a, b = _fit_coefficients(f, t, m, rng, center, radius)
                res = _verify(f, t, a, b, rng, center, radius)
                if res <= VERIFY_TOL:
                    break
            else:
                raise InconsistentSamples(
                    f"Wronskian vanishes at m={m} but the fitted quotient misses f by {res:.3g} at t={t}"
                )
            verdict.coefficients.append((a, b))
            verdict.residuals.append(res)
        verdict.rational = True
        verdict.m = m
        return verdict
    return verdict


# -- invariance harness -------------------------------------------------------
def _z_taylor(A, Zx0, x0, K):
    """Taylor coefficients of Z at a regular point from Z' = A Z."""
    Ac = A.taylor(x0, K)
    n = Zx0.shape[0]
    Zc = np.zeros((K, n, n), dtype=complex)
    Zc[0] = Zx0
    for k in range(K - 1):
        acc = np.zeros((n, n), dtype=complex)
        for j in range(k + 1):
            acc += Ac[j] @ Zc[k - j]
        Zc[k + 1] = acc / (k + 1)
    return Zc


def _jet_matrix(Zc):
    K, n, _ = Zc.shape
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Jet(Zc[:, i, j])
    return out


class _FrameEvaluator:
    """Z0(x, t) from the base point, optionally with dZ0/dt_k by central differences."""

    def __init__(self, sys, base_point, tol, t_derivatives):
        self.sys = sys
        self.a0 = complex(base_point)
        self.tol = tol
        self.t_derivatives = t_derivatives

    def Z(self, x, t):
        return integrate_along(self.sys, Path([Line(self.a0, complex(x))]), t, tol=self.tol).T

    def Z_taylor(self, x0, t, K):
        return _z_taylor(self.sys.numeric(t), self.Z(x0, t), x0, K)

    def _shifted(self, t, k, sgn):
        tt = list(t)
        tt[k] += sgn * FD_T_STEP
        return tuple(tt)

    def dZ(self, x, t):
        return [(self.Z(x, self._shifted(t, k, 1)) - self.Z(x, self._shifted(t, k, -1))) / (2 * FD_T_STEP)
                for k in range(len(t))]

    def dZ_taylor(self, x0, t, K):
        return [(self.Z_taylor(x0, self._shifted(t, k, 1), K) - self.Z_taylor(x0, self._shifted(t, k, -1), K))
                / (2 * FD_T_STEP) for k in range(len(t))]

    def candidate_value(self, cand, x, t, M=None, dM=None):
        Z = self.Z(x, t)
        if not self.t_derivatives:
            return complex(cand(Z if M is None else Z @ M))
        dZ = self.dZ(x, t)
        if M is None:
            return complex(cand(Z, dZ))
        return complex(cand(Z @ M, [d @ M + Z @ dm for d, dm in zip(dZ, dM)]))

    def candidate_taylor(self, cand, x0, t, K):
        Zj = _jet_matrix(self.Z_taylor(x0, t, K))
        if not self.t_derivatives:
            out = cand(Zj)
        else:
            out = cand(Zj, [_jet_matrix(d) for d in self.dZ_taylor(x0, t, K)])
        return out.c if isinstance(out, Jet) else Jet.constant(complex(out), K).c


def invariance_rationality_harness(sys, md, candidate, m_max: int = DEFAULT_M_MAX, t_derivatives: bool = False,
                                   tol: float = 1e-6, integration_tol: float = 1e-11, seed: int = 0) -> dict:
    """Check monodromy invariance of ``candidate`` and, if invariant, rationality in x.

    ``candidate(Z)`` (or ``candidate(Z, dZ)`` with ``t_derivatives``) maps the
    fundamental matrix normalized by Z0(a0) = I, and its t-derivatives, to a
    scalar using arithmetic only.  An invariant candidate that is not
    rational up to ``m_max`` is flagged for review: it would contradict the
    expected theory and most likely signals numerical trouble.
    """
    ev = _FrameEvaluator(sys, md.plan.base_point, integration_tol, t_derivatives)
    a0 = ev.a0
    report = {"invariant": True, "rational": None, "m": None, "deviations": [], "counterexampleCandidate": False}
    grid_ok = []
    for g, (t, mats) in enumerate(zip(md.grid, md.matrices)):
        if mats is None:
            continue
        grid_ok.append(t)
        al = sys.alphas_at(t)
        d0 = float(np.min(np.abs(al - a0))) if al.size else 1.0
        xs = [a0 + 0.25 * d0 * np.exp(2j * np.pi * k / 3 + 0.4j) for k in range(3)]
        dMs = None
        if t_derivatives:
            plus = [_monodromy_at(sys, md.plan, ev._shifted(t, k, 1), md.tol)[0] for k in range(len(t))]
            minus = [_monodromy_at(sys, md.plan, ev._shifted(t, k, -1), md.tol)[0] for k in range(len(t))]
            dMs = [[(p[i] - q[i]) / (2 * FD_T_STEP) for p, q in zip(plus, minus)] for i in range(len(mats))]
        for i, M in enumerate(mats):
            dev = 0.0
            for x in xs:
                v = ev.candidate_value(candidate, x, t)
                vi = ev.candidate_value(candidate, x, t, M, None if dMs is None else dMs[i])
                dev = max(dev, abs(vi - v) / max(1.0, abs(v)))
            report["deviations"].append({"grid": g, "loop": i, "deviation": dev})
            if dev > tol:
                report["invariant"] = False
    if not report["invariant"] or not grid_ok:
        return report

    # rationality on a disk around the base point that avoids every pole
    d_min = min(float(np.min(np.abs(sys.alphas_at(t) - a0))) if sys.poles else 1.0 for t in grid_ok)
    radius = 0.5 * d_min
    f = SampledFunction(
        lambda x, t: ev.candidate_value(candidate, x, t),
        lambda x0, t, K: ev.candidate_taylor(candidate, x0, t, K),
        "candidate",
    )
    verdict = detect_rational_in_x(f, m_max, grid_ok, seed=seed, center=a0, radius=radius)
    report["rational"] = verdict.rational
    report["m"] = verdict.m
    report["verdict"] = verdict.to_json()
    if not verdict.rational:
        report["counterexampleCandidate"] = True
    return report


__all__ = [
    "RationalityVerdict",
    "SampledFunction",
    "detect_rational_in_x",
    "invariance_rationality_harness",
    "wronskian",
    "wronskian_ratio",
]
