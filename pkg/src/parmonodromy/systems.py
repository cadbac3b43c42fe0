"""Linear systems dY/dx = A(x, t) Y with A rational in x.

A(x, t) is kept in partial-fraction form: a list of (moving) poles, each with
its principal part, plus a polynomial tail in x.  The same representation
doubles as a global gauge matrix P(x, t).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidSystem,
    PoleCollision,
    PoleCollisionAtParameter,
    SampleAtSingularity,
    SingularGauge,
)
from .param_algebra import (
    ParamMatrix,
    ParamRational,
    as_point,
    binom,
    obj_eval,
    obj_zeros,
    random_points,
)
from .series import INFINITY, MatrixLaurentSeries, delta_apply, invert

# relative distance below which two pole locations are considered equal
POLE_COLLISION_RTOL = 1e-12


@dataclass(frozen=True)
class Pole:
    """Pole at x = alpha(t); ``principal[0]`` is the deepest order -m."""

    alpha: ParamRational
    principal: tuple

    @property
    def order(self) -> int:
        return len(self.principal)

    def coeff(self, k: int) -> ParamMatrix:
        """Coefficient of (x - alpha)^(-k), 1 <= k <= order."""
        return self.principal[self.order - k]


class NumericSystem:
    """A(x) at a fixed parameter point, vectorized for fast evaluation."""

    def __init__(self, alphas, principals, tail, n):
        self.n = n
        self.alphas = np.asarray(alphas, dtype=complex).reshape(-1)
        m = max((len(p) for p in principals), default=0)
        self.max_order = m
        # coefs[j, k-1] multiplies (x - alpha_j)^(-k)
        self.coefs = np.zeros((len(principals), max(m, 1), n, n), dtype=complex)
        for j, p in enumerate(principals):
            p = np.asarray(p, dtype=complex)
            for k in range(1, len(p) + 1):
                self.coefs[j, k - 1] = p[len(p) - k]
        self.tail = np.asarray(tail, dtype=complex).reshape(-1, n, n) if len(tail) else np.zeros((0, n, n), complex)
        self._ks = np.arange(1, max(m, 1) + 1)
        self._flat = self.coefs.reshape(-1, n * n)
        self._tail_flat = self.tail.reshape(-1, n * n)

    def __call__(self, x) -> np.ndarray:
        x = complex(x)
        if self.alphas.size:
            inv = 1.0 / (x - self.alphas)
            w = inv if self.max_order <= 1 else (inv[:, None] ** self._ks[None, :]).ravel()
            out = w @ self._flat
        else:
            out = np.zeros(self.n * self.n, dtype=complex)
        if self.tail.shape[0]:
            out = out + (x ** np.arange(self.tail.shape[0])) @ self._tail_flat
        return out.reshape(self.n, self.n)

    def derivative(self, x) -> np.ndarray:
        x = complex(x)
        out = np.zeros((self.n, self.n), dtype=complex)
        if self.alphas.size:
            inv = 1.0 / (x - self.alphas)
            w = -self._ks[None, :] * inv[:, None] ** (self._ks[None, :] + 1)
            out += np.tensordot(w, self.coefs, axes=([0, 1], [0, 1]))
        d = self.tail.shape[0]
        if d > 1:
            p = np.arange(1, d)
            out += np.tensordot(p * x ** (p - 1), self.tail[1:], axes=(0, 0))
        return out

    def pole_distance(self, x) -> float:
        if not self.alphas.size:
            return math.inf
        return float(np.min(np.abs(complex(x) - self.alphas)))

    def taylor(self, x0, K: int) -> np.ndarray:
        """Taylor coefficients of A at a regular point x0, orders 0..K-1."""
        x0 = complex(x0)
        out = np.zeros((K, self.n, self.n), dtype=complex)
        ls = np.arange(K)
        for j, a in enumerate(self.alphas):
            d = x0 - a
            for k in range(1, self.max_order + 1):
                c = self.coefs[j, k - 1]
                if not np.any(c):
                    continue
                w = np.array([binom(-k, int(l)) for l in ls]) * d ** (-k - ls.astype(float))
                out += w[:, None, None] * c
        for p in range(self.tail.shape[0]):
            for l in range(min(p, K - 1) + 1):
                out[l] += binom(p, l) * x0 ** (p - l) * self.tail[p]
        return out


class RationalMatrix:
    """Matrix rational in x: principal parts at moving poles + polynomial tail."""

    def __init__(self, n: int, poles=(), tail=(), r: int = 1):
        self.n = int(n)
        self.r = int(r)
        ps = []
        for p in poles:
            if isinstance(p, Pole):
                alpha, principal = p.alpha, p.principal
            elif isinstance(p, dict):
                alpha, principal = p["alpha"], p["principal"]
            else:
                alpha, principal = p
            alpha = alpha if isinstance(alpha, ParamRational) else ParamRational.from_json(alpha, self.r)
            principal = tuple(self._pm(m) for m in principal)
            if not principal:
                raise InvalidSystem("a pole needs at least one principal coefficient")
            ps.append(Pole(alpha, principal))
        self.poles = tuple(ps)
        self.tail = tuple(self._pm(m) for m in tail)

    def _pm(self, m) -> ParamMatrix:
        pm = m if isinstance(m, ParamMatrix) else ParamMatrix(m, self.r)
        if pm.n != self.n:
            raise InvalidSystem(f"expected {self.n}x{self.n} matrices, got {pm.n}x{pm.n}")
        return pm

    @classmethod
    def constant(cls, C, r: int = 1):
        C = ParamMatrix(C, r) if not isinstance(C, ParamMatrix) else C
        return cls(C.n, (), (C,), r)

    @classmethod
    def identity(cls, n: int, r: int = 1):
        return cls.constant(ParamMatrix.identity(n, r), r)

    def pole_orders(self) -> list[int]:
        return [p.order for p in self.poles]

    def alphas_at(self, t) -> np.ndarray:
        return np.array([p.alpha.eval(t) for p in self.poles], dtype=complex)

    def numeric(self, t) -> NumericSystem:
        t = as_point(t, self.r)
        alphas = self.alphas_at(t)
        principals = [np.stack([m.eval(t) for m in p.principal]) for p in self.poles]
        tail = [m.eval(t) for m in self.tail]
        return NumericSystem(alphas, principals, tail, self.n)

    def evaluate(self, x, t) -> np.ndarray:
        return self.numeric(t)(x)

    def derivative(self, x, t) -> np.ndarray:
        return self.numeric(t).derivative(x)

    # -- local expansions -------------------------------------------------------
    def localize(self, pole_index: int, N: int, t=None) -> MatrixLaurentSeries:
        """Laurent expansion at pole ``pole_index`` through order N.

        Symbolic in t when ``t`` is None, numeric otherwise.
        """
        if not 0 <= pole_index < len(self.poles):
            raise IndexError(f"pole index {pole_index} out of range")
        pole = self.poles[pole_index]
        return self._expand(pole.alpha, N, t, own=pole_index)

    def expand_at(self, center, N: int, t=None) -> MatrixLaurentSeries:
        """Expansion at an arbitrary center (a ParamRational or complex)."""
        own = None
        for j, p in enumerate(self.poles):
            if _same_function(p.alpha, center, self.r):
                own = j
        if not isinstance(center, ParamRational):
            center = ParamRational.const(center, self.r)
        return self._expand(center, N, t, own=own)

    def _expand(self, center: ParamRational, N: int, t, own) -> MatrixLaurentSeries:
        n, r = self.n, self.r
        m = self.poles[own].order if own is not None else 0
        if N < -m:
            raise InvalidSystem(f"need N >= {-m} to expand this pole")
        low = -m
        K = N - low + 1
        symbolic = t is None
        if symbolic:
            coeffs = obj_zeros((K, n, n), r)
            c0 = center

            def mat(pm):
                return pm.entries

            def val(f):
                return f
        else:
            t = as_point(t, r)
            coeffs = np.zeros((K, n, n), dtype=complex)
            c0 = center.eval(t)

            def mat(pm):
                return pm.eval(t)

            def val(f):
                return f.eval(t)

        for j, p in enumerate(self.poles):
            if j == own:
                for k in range(1, p.order + 1):
                    coeffs[-k - low] = coeffs[-k - low] + mat(p.coeff(k))
                continue
            d = (c0 - p.alpha) if symbolic else c0 - val(p.alpha)
            if symbolic:
                if d.is_zero():
                    raise PoleCollision("expansion center coincides with another pole")
                inv_d = d.reciprocal()
            else:
                if abs(d) <= POLE_COLLISION_RTOL * (1 + abs(c0)):
                    raise PoleCollisionAtParameter(f"poles collide at t={t}")
                inv_d = 1.0 / d
            # powers of 1/d, computed once per pole
            powers = [inv_d]
            for _ in range(p.order + N):
                powers.append(powers[-1] * inv_d)
            for k in range(1, p.order + 1):
                c = mat(p.coeff(k))
                for l in range(0, N + 1):
                    b = binom(-k, l)
                    if b == 0:
                        continue
                    coeffs[l - low] = coeffs[l - low] + c * (powers[k + l - 1] * b)
        for q, tm in enumerate(self.tail):
            c = mat(tm)
            if symbolic:
                apow = [ParamRational.const(1, r)]
                for _ in range(q):
                    apow.append(apow[-1] * c0)
            else:
                apow = [c0**e for e in range(q + 1)]
            for l in range(0, min(q, N) + 1):
                coeffs[l - low] = coeffs[l - low] + c * (apow[q - l] * binom(q, l))
        return MatrixLaurentSeries(center if symbolic else c0, low, coeffs, N, r=r if symbolic else None)

    def expand_at_infinity(self, N: int, t=None) -> MatrixLaurentSeries:
        """A(1/u) as a Laurent series in u = 1/x through order N."""
        n, r = self.n, self.r
        low = -(len(self.tail) - 1) if self.tail else 0
        low = min(low, 0)
        K = N - low + 1
        if K <= 0:
            raise InvalidSystem("truncation below the polynomial degree")
        symbolic = t is None
        if symbolic:
            coeffs = obj_zeros((K, n, n), r)
        else:
            t = as_point(t, r)
            coeffs = np.zeros((K, n, n), dtype=complex)
        for p in self.poles:
            a = p.alpha if symbolic else p.alpha.eval(t)
            apow = [ParamRational.const(1, r) if symbolic else 1.0 + 0j]
            for _ in range(N + 1):
                apow.append(apow[-1] * a)
            for k in range(1, p.order + 1):
                c = p.coeff(k).entries if symbolic else p.coeff(k).eval(t)
                # (x - a)^-k = u^k (1 - a u)^-k = sum_l C(k+l-1, l) a^l u^(k+l)
                for l in range(0, N - k + 1):
                    coeffs[k + l - low] = coeffs[k + l - low] + c * (apow[l] * float(math.comb(k + l - 1, l)))
        for q, tm in enumerate(self.tail):
            if -q <= N:
                c = tm.entries if symbolic else tm.eval(t)
                coeffs[-q - low] = coeffs[-q - low] + c
        return MatrixLaurentSeries(INFINITY, low, coeffs, N, r=r if symbolic else None)

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "n": self.n,
            "params": self.r,
            "poles": [
                {"alpha": p.alpha.to_json(), "principal": [m.to_json() for m in p.principal]}
                for p in self.poles
            ],
            "tail": [m.to_json() for m in self.tail],
        }

    @classmethod
    def from_json(cls, data):
        r = int(data.get("params", 1))
        n = int(data["n"])
        poles = [
            (ParamRational.from_json(p["alpha"], r), [ParamMatrix.from_json(m, r) for m in p["principal"]])
            for p in data.get("poles", [])
        ]
        tail = [ParamMatrix.from_json(m, r) for m in data.get("tail", [])]
        return cls(n, poles, tail, r)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, r={self.r}, pole_orders={self.pole_orders()}, tail_degree={len(self.tail) - 1})"


def _same_function(a, b, r, points=None) -> bool:
    if not isinstance(a, ParamRational):
        a = ParamRational.const(a, r)
    if not isinstance(b, ParamRational):
        b = ParamRational.const(b, r)
    if a.num == b.num and a.den == b.den:
        return True
    for pt in points or random_points(r, 5, seed=2024):
        try:
            va, vb = a.eval(pt), b.eval(pt)
        except ZeroDivisionError:
            continue
        if abs(va - vb) > 1e-10 * (1 + abs(va)):
            return False
    return True


class DeepestCoefficientVanishes(UserWarning):
    """The deepest principal coefficient of a pole vanishes at some parameter point."""


class LinearSystem(RationalMatrix):
    """dY/dx = A(x, t) Y with validated pole structure."""

    def __init__(self, n: int, poles=(), tail=(), r: int = 1, check: bool = True):
        super().__init__(n, poles, tail, r)
        if check:
            self.validate()

    def validate(self, points=None):
        pts = points or random_points(self.r, 5, seed=31337)
        for i, p in enumerate(self.poles):
            if p.principal[0].is_zero():
                raise InvalidSystem(f"deepest principal coefficient of pole {i} is identically zero")
            for j in range(i):
                q = self.poles[j]
                if _same_function(p.alpha, q.alpha, self.r, pts):
                    raise PoleCollision(f"poles {j} and {i} have the same location")

    def warn_vanishing_deepest(self, points) -> list:
        """Report parameter points where a deepest coefficient vanishes."""
        hits = []
        for i, p in enumerate(self.poles):
            for t in points:
                if np.max(np.abs(p.principal[0].eval(t))) <= 1e-12:
                    hits.append((i, as_point(t, self.r)))
                    warnings.warn(
                        f"deepest coefficient of pole {i} vanishes at t={as_point(t, self.r)}",
                        DeepestCoefficientVanishes,
                        stacklevel=2,
                    )
        return hits

    def check_distinct_at(self, t):
        alphas = self.alphas_at(t)
        for i in range(len(alphas)):
            for j in range(i):
                if abs(alphas[i] - alphas[j]) <= POLE_COLLISION_RTOL * (1 + abs(alphas[i])):
                    raise PoleCollisionAtParameter(f"poles {j} and {i} coincide at t={as_point(t, self.r)}")

    def at_infinity(self, N: int, t=None) -> MatrixLaurentSeries:
        """Coefficient series of dY/du = -u^-2 A(1/u, t) Y at u = 0."""
        return -(self.expand_at_infinity(N + 2, t).shift(-2))

    def infinity_is_regular(self, t=None) -> bool:
        s = self.at_infinity(0, t)
        v = s.valuation() if t is None else s.valuation(rtol=0.0)
        if t is not None:
            scale = max(1.0, float(np.max(np.abs(s.coeffs))))
            for k in range(s.coeffs.shape[0]):
                if s.low + k < 0 and np.max(np.abs(s.coeffs[k])) > 1e-12 * scale:
                    return False
            return True
        return v >= 0

    @classmethod
    def fuchsian(cls, alphas, residues, r: int = 1):
        """Convenience constructor for sum_i B_i/(x - a_i)."""
        residues = [ParamMatrix(b, r) if not isinstance(b, ParamMatrix) else b for b in residues]
        n = residues[0].n
        poles = [
            (a if isinstance(a, ParamRational) else ParamRational.from_json(a, r), [b])
            for a, b in zip(alphas, residues)
        ]
        return cls(n, poles, (), r)

    @classmethod
    def from_json(cls, data):
        base = RationalMatrix.from_json(data)
        return cls(base.n, base.poles, base.tail, base.r)


class GaugeTransform:
    """A gauge P: either a local Laurent series or a global rational matrix in x."""

    def __init__(self, P):
        if isinstance(P, (MatrixLaurentSeries, RationalMatrix)):
            self.P = P
        elif isinstance(P, GaugeTransform):
            self.P = P.P
        else:
            self.P = RationalMatrix.constant(P)

    @property
    def is_series(self) -> bool:
        return isinstance(self.P, MatrixLaurentSeries)

    @property
    def n(self):
        return self.P.n

    def evaluate(self, x, t):
        if self.is_series:
            return self.P.evaluate(x, t)
        return self.P.evaluate(x, t)

    def derivative(self, x, t):
        if self.is_series:
            return self.P.derivative().evaluate(x, t)
        return self.P.derivative(x, t)

    def to_json(self):
        if self.is_series:
            return {"kind": "series", **self.P.to_json()}
        return {"kind": "global", **self.P.to_json()}

    @classmethod
    def from_json(cls, data):
        kind = data.get("kind", "global")
        if kind == "series":
            r = data.get("params")
            return cls(MatrixLaurentSeries.from_json(data, r))
        return cls(RationalMatrix.from_json(data))


def localize(sys: RationalMatrix, pole_index: int, N: int, t=None) -> MatrixLaurentSeries:
    return sys.localize(pole_index, N, t)


def _negligible(c, r) -> bool:
    """Structurally zero, or zero to rounding at random parameter points."""
    if c.dtype != object:
        return not np.any(np.abs(c) > 1e-13)
    if all(e.is_zero() for e in c.flat):
        return True
    for pt in random_points(r, 3, seed=4242):
        try:
            v = obj_eval(c, pt)
        except ZeroDivisionError:
            return False
        scale = max(1.0, max(abs(e.num.eval_terms(pt)[1]) for e in c.flat))
        if np.max(np.abs(v)) > 1e-11 * scale:
            return False
    return True


def _gauge_series(A: MatrixLaurentSeries, P: MatrixLaurentSeries, form: str, Pinv=None):
    Pinv = invert(P) if Pinv is None else Pinv
    if form == "delta":
        dP = delta_apply(P)
    elif form == "dx":
        dP = P.derivative()
    elif form == "dinf":
        # x-derivative of a series in u = 1/x: d/dx = -u^2 d/du
        dP = -(P.derivative().shift(2))
    else:
        raise ValueError(f"unknown form {form!r}")
    return dP @ Pinv + P @ A @ Pinv


def apply_gauge(sys, P, form: str | None = None, t=None, verify: bool = True):
    """Gauge transform: B = P' P^-1 + P A P^-1.

    * series ``sys`` and series ``P``: the delta-form variant
      ``delta(P) P^-1 + P A P^-1`` by default (``form='dx'`` for d/dx);
    * LinearSystem and series ``P``: localizes A at P's center (d/dx form);
    * LinearSystem and global ``P``: returns a LinearSystem.  The poles of the
      result are searched among the poles of A and P; the result is checked
      against the direct formula at random samples and ``SingularGauge`` is
      raised when P^-1 introduces poles elsewhere.
    """
    G = GaugeTransform(P)
    if isinstance(sys, MatrixLaurentSeries):
        Pser = G.P if G.is_series else G.P.expand_at(sys.center, sys.truncation + 8, None if sys.symbolic else t)
        if not G.is_series and not sys.symbolic and t is None:
            raise ValueError("numeric series input with a global gauge needs t")
        if G.is_series and Pser.symbolic != sys.symbolic:
            Pser = Pser.at(t)
        try:
            return _gauge_series(sys, Pser, form or "delta")
        except ArithmeticError as exc:
            raise SingularGauge(str(exc)) from exc
    if not isinstance(sys, RationalMatrix):
        raise TypeError("apply_gauge expects a LinearSystem or a MatrixLaurentSeries")
    if G.is_series:
        Pser = G.P
        A = sys.expand_at(Pser.center, max(Pser.truncation, 0) + 8, t if not Pser.symbolic else None)
        if Pser.symbolic != A.symbolic:
            Pser = Pser.at(t)
        try:
            return _gauge_series(A, Pser, form or "dx")
        except ArithmeticError as exc:
            raise SingularGauge(str(exc)) from exc
    return _apply_global_gauge(sys, G.P, verify=verify)


def _apply_global_gauge(sys: RationalMatrix, P: RationalMatrix, verify=True) -> LinearSystem:
    if P.n != sys.n or P.r != sys.r:
        raise SingularGauge("gauge and system have different shapes")
    r, n = sys.r, sys.n
    candidates = [p.alpha for p in sys.poles]
    for p in P.poles:
        if not any(_same_function(p.alpha, c, r) for c in candidates):
            candidates.append(p.alpha)
    depth = sum(p.order for p in sys.poles) + 2 * sum(p.order for p in P.poles) + 2
    new_poles = []
    for c in candidates:
        N = depth + 2
        for _ in range(4):
            A = sys.expand_at(c, N)
            Ps = P.expand_at(c, N + depth)
            try:
                B = _gauge_series(A, Ps, "dx")
            except ArithmeticError as exc:
                raise SingularGauge(str(exc)) from exc
            if B.truncation >= -1:
                break
            N *= 2
        else:
            raise SingularGauge("could not resolve the principal part of the transformed system")
        principal = []
        for k in range(B.low, 0):
            cm = B.coeff(k)
            principal.append(cm)
        while principal and _negligible(principal[0], r):
            principal.pop(0)
        if principal:
            new_poles.append((c, [ParamMatrix(_clean(m, r), r) for m in principal]))
    # polynomial part from the expansion at infinity
    tail = []
    dt = max(len(sys.tail), 1) + 2 * max(len(P.tail), 1) + 2
    for _ in range(4):
        Ai = sys.expand_at_infinity(dt)
        Pi = P.expand_at_infinity(dt + 2 * dt)
        try:
            Binf = _gauge_series(Ai, Pi, "dinf")
        except ArithmeticError as exc:
            raise SingularGauge(str(exc)) from exc
        if Binf.truncation >= 0:
            break
        dt *= 2
    else:
        raise SingularGauge("could not resolve the polynomial part of the transformed system")
    for k in range(Binf.low, 1):
        tail.append(Binf.coeff(k))
    tail = tail[::-1]  # x^0 first
    while tail and _negligible(tail[-1], r):
        tail.pop()
    B = LinearSystem(n, new_poles, [ParamMatrix(_clean(m, r), r) for m in tail], r, check=False)
    if verify:
        samples = _generic_samples(sys, P, B, count=5)
        res = verify_gauge(sys, B, P, samples)
        scale = max(1.0, max(np.linalg.norm(B.evaluate(x, t)) for x, t in samples))
        if res > 1e-8 * scale:
            raise SingularGauge(
                f"transformed system does not match the gauge formula (residual {res:.3g}); "
                "P^-1 probably has poles outside the poles of A and P"
            )
    return B


def _clean(c, r):
    out = c.copy()
    if c.dtype == object:
        for idx, e in np.ndenumerate(c):
            if not e.is_zero() and _negligible(np.array([[e]], dtype=object), r):
                out[idx] = ParamRational.const(0, r)
    return out


def _generic_samples(*systems, count=5, seed=5150):
    rng = np.random.default_rng(seed)
    r = systems[0].r
    samples = []
    tries = 0
    while len(samples) < count and tries < 200:
        tries += 1
        t = random_points(r, 1, seed=int(rng.integers(1 << 30)), radius=0.5)[0]
        x = complex(rng.normal(), rng.normal()) * 1.5
        ok = True
        for s in systems:
            try:
                al = s.alphas_at(t)
            except ZeroDivisionError:
                ok = False
                break
            if al.size and np.min(np.abs(x - al)) < 0.3:
                ok = False
                break
        if ok:
            samples.append((x, t))
    return samples


def verify_gauge(A: RationalMatrix, B: RationalMatrix, P, samples) -> float:
    """max over samples of ||B - P' P^-1 - P A P^-1||_F."""
    G = GaugeTransform(P)
    worst = 0.0
    for x, t in samples:
        t = as_point(t, A.r)
        x = complex(x)
        for s in (A, B) + (() if G.is_series else (G.P,)):
            try:
                al = s.alphas_at(t)
            except ZeroDivisionError as exc:
                raise SampleAtSingularity(f"pole location undefined at t={t}") from exc
            if al.size and np.min(np.abs(x - al)) < 1e-9 * (1 + abs(x)):
                raise SampleAtSingularity(f"sample x={x} sits on a pole at t={t}")
        try:
            Pv = G.evaluate(x, t)
            dP = G.derivative(x, t)
            Pinv = np.linalg.inv(Pv)
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise SampleAtSingularity(f"gauge is singular at x={x}, t={t}") from exc
        res = B.evaluate(x, t) - dP @ Pinv - Pv @ A.evaluate(x, t) @ Pinv
        worst = max(worst, float(np.linalg.norm(res)))
    return worst


class SingularityKind(str, enum.Enum):
    SIMPLE = "Simple"
    REGULAR_BY_WITNESS = "RegularByWitness"
    HIGHER_ORDER_UNRESOLVED = "HigherOrderUnresolved"


def _witness_samples(sys: RationalMatrix, pole_index: int, t, count=6):
    """(x, t') pairs around the pole for t' near t, away from other poles."""
    t = as_point(t, sys.r)
    out = []
    for k in range(count):
        shift = 0.01 * np.exp(2j * np.pi * k / count)
        tk = tuple(c + shift for c in t)
        al = sys.alphas_at(tk)
        a = al[pole_index]
        others = np.delete(al, pole_index)
        rho = 0.5 * min(1.0, float(np.min(np.abs(others - a))) if others.size else 1.0)
        out.append((a + rho * np.exp(1j * (0.7 + 2 * np.pi * k / count)), tk))
    return out


def classify_singularity(sys: LinearSystem, pole_index: int, t, witness=None) -> SingularityKind:
    """Simple, RegularByWitness, or HigherOrderUnresolved (regularity not decided)."""
    pole = sys.poles[pole_index]
    t = as_point(t, sys.r)
    if pole.order == 1:
        if not pole.principal[0].is_zero():
            if np.max(np.abs(pole.principal[0].eval(t))) <= 1e-12:
                warnings.warn(f"residue vanishes at t={t}", DeepestCoefficientVanishes, stacklevel=2)
            return SingularityKind.SIMPLE
    if witness is None:
        return SingularityKind.HIGHER_ORDER_UNRESOLVED
    G = GaugeTransform(witness)
    try:
        if G.is_series:
            A = sys.localize(pole_index, max(G.P.truncation, 0) + 8, t)
            Pn = G.P.at(t)
            B = _gauge_series(A, Pn, "dx")
            scale = max(1.0, float(np.max(np.abs(B.coeffs))))
            for k in range(B.low, -1):
                if np.max(np.abs(B.coeff(k))) > 1e-8 * scale:
                    return SingularityKind.HIGHER_ORDER_UNRESOLVED
            return SingularityKind.REGULAR_BY_WITNESS
        B = _apply_global_gauge(sys, G.P, verify=False)
    except (SingularGauge, ArithmeticError):
        return SingularityKind.HIGHER_ORDER_UNRESOLVED
    for q in B.poles:
        if _same_function(q.alpha, pole.alpha, sys.r) and q.order > 1:
            return SingularityKind.HIGHER_ORDER_UNRESOLVED
    samples = _witness_samples(sys, pole_index, t)
    try:
        res = verify_gauge(sys, B, G.P, samples)
    except SampleAtSingularity:
        return SingularityKind.HIGHER_ORDER_UNRESOLVED
    return SingularityKind.REGULAR_BY_WITNESS if res <= 1e-8 else SingularityKind.HIGHER_ORDER_UNRESOLVED


__all__ = [
    "DeepestCoefficientVanishes",
    "GaugeTransform",
    "LinearSystem",
    "NumericSystem",
    "Pole",
    "RationalMatrix",
    "SingularityKind",
    "apply_gauge",
    "classify_singularity",
    "localize",
    "verify_gauge",
]
