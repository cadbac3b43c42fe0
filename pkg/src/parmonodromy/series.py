"""Truncated matrix Laurent series in powers of u = x - alpha(t).

A :class:`MatrixLaurentSeries` stores the coefficients for orders
``low .. low + K - 1`` together with the order through which they are
*valid* (``truncation``).  Every operation recomputes the tightest guaranteed
truncation instead of using a global order, because multiplying by a series
with poles destroys high-order information.  ``truncation = math.inf`` marks
an exact Laurent polynomial.

Coefficients are either complex ndarrays (numeric path, t fixed) or object
ndarrays of :class:`~parmonodromy.param_algebra.ParamRational` (symbolic in
t).  Both go through the same code; ``at(t)`` converts symbolic to numeric.
"""
from __future__ import annotations

import math
import numbers

import numpy as np

from .errors import (
    CenterMismatch,
    InsufficientTruncation,
    SingularLeadingCoefficient,
)
from .param_algebra import (
    ParamMatrix,
    ParamRational,
    as_point,
    complex_to_json,
    obj_eval,
    obj_identity,
    obj_inverse,
    obj_matmul,
    obj_zeros,
    parse_complex,
    random_points,
)

INFINITY = "infinity"
# default relative order kept when inverting an exact series that is not a monomial
DEFAULT_INVERSE_ORDERS = 20


def _is_zero(c) -> bool:
    if c.dtype == object:
        return all(e.is_zero() for e in c.flat)
    return not np.any(c)


def _centers_equal(a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    if isinstance(a, ParamRational) and isinstance(b, ParamRational):
        if a.num == b.num and a.den == b.den:
            return True
        for pt in random_points(a.r, 3, seed=7):
            try:
                va, vb = a.eval(pt), b.eval(pt)
            except ZeroDivisionError:
                continue
            if abs(va - vb) > 1e-12 * (1 + abs(va)):
                return False
        return True
    if isinstance(a, ParamRational) or isinstance(b, ParamRational):
        return False
    a, b = complex(a), complex(b)
    return abs(a - b) <= 1e-13 * (1 + abs(a))


class MatrixLaurentSeries:
    """``sum_{i >= low} coeffs[i - low] * u**i`` valid through ``truncation``."""

    __slots__ = ("center", "low", "coeffs", "truncation", "r")

    def __init__(self, center, low: int, coeffs, truncation=None, r: int | None = None):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise ValueError("coefficients must have shape (K, n, n)")
        if coeffs.dtype != object:
            coeffs = coeffs.astype(complex)
        self.low = int(low)
        if truncation is None:
            truncation = self.low + coeffs.shape[0] - 1
        if truncation != math.inf:
            truncation = int(truncation)
            if truncation < self.low:
                raise InsufficientTruncation("truncation order below the low order")
            k = truncation - self.low + 1
            if coeffs.shape[0] < k:
                pad_shape = (k - coeffs.shape[0],) + coeffs.shape[1:]
                coeffs = np.concatenate([coeffs, self._zeros_like(coeffs, pad_shape, r)])
            else:
                coeffs = coeffs[:k]
        self.coeffs = coeffs
        self.truncation = truncation
        if isinstance(center, numbers.Number) and not isinstance(center, bool):
            center = complex(center)
        self.center = center
        if r is None:
            if isinstance(center, ParamRational):
                r = center.r
            elif coeffs.dtype == object and coeffs.size:
                r = coeffs.flat[0].r
        self.r = r

    @staticmethod
    def _zeros_like(coeffs, shape, r):
        if coeffs.dtype == object:
            rr = r if r is not None else (coeffs.flat[0].r if coeffs.size else 1)
            return obj_zeros(shape, rr)
        return np.zeros(shape, dtype=complex)

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_dict(cls, center, terms: dict, n: int, truncation=None, symbolic=False, r=None):
        """Build from ``{order: matrix}``; missing orders are zero."""
        if not terms:
            raise ValueError("need at least one coefficient")
        low, high = min(terms), max(terms)
        if symbolic:
            rr = r or (center.r if isinstance(center, ParamRational) else 1)
            coeffs = obj_zeros((high - low + 1, n, n), rr)
            for k, m in terms.items():
                coeffs[k - low] = m.entries if isinstance(m, ParamMatrix) else ParamMatrix(m, rr).entries
        else:
            coeffs = np.zeros((high - low + 1, n, n), dtype=complex)
            for k, m in terms.items():
                coeffs[k - low] = np.asarray(m, dtype=complex)
            rr = r
        return cls(center, low, coeffs, high if truncation is None else truncation, r=rr)

    @classmethod
    def identity(cls, n, center=0.0, truncation=math.inf, symbolic=False, r=1):
        eye = obj_identity(n, r) if symbolic else np.eye(n, dtype=complex)
        return cls(center, 0, eye[None], truncation, r=r)

    @classmethod
    def constant(cls, mat, center=0.0, truncation=math.inf, r=None):
        mat = mat.entries if isinstance(mat, ParamMatrix) else np.asarray(mat)
        return cls(center, 0, mat[None], truncation, r=r)

    @classmethod
    def monomial(cls, mat, order: int, center=0.0, r=None):
        mat = mat.entries if isinstance(mat, ParamMatrix) else np.asarray(mat)
        return cls(center, order, mat[None], math.inf, r=r)

    # -- basic properties -----------------------------------------------------
    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def symbolic(self) -> bool:
        return self.coeffs.dtype == object

    @property
    def exact(self) -> bool:
        return self.truncation == math.inf

    @property
    def high(self) -> int:
        return self.low + self.coeffs.shape[0] - 1

    def _zero_mat(self):
        if self.symbolic:
            return obj_zeros((self.n, self.n), self.r or 1)
        return np.zeros((self.n, self.n), dtype=complex)

    def coeff(self, i: int):
        if i > self.truncation:
            raise InsufficientTruncation(f"order {i} is beyond the truncation {self.truncation}")
        if i < self.low or i > self.high:
            return self._zero_mat()
        return self.coeffs[i - self.low]

    def valuation(self, rtol: float = 0.0):
        """First order whose coefficient is nonzero (``math.inf`` for zero)."""
        if self.symbolic or rtol == 0.0:
            for k in range(self.coeffs.shape[0]):
                if not _is_zero(self.coeffs[k]):
                    return self.low + k
            return math.inf
        scale = float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0
        for k in range(self.coeffs.shape[0]):
            if np.max(np.abs(self.coeffs[k])) > rtol * scale:
                return self.low + k
        return math.inf

    def deepest_order_flags(self, points) -> list:
        """Parameter points where the coefficient at ``low`` vanishes."""
        flagged = []
        c = self.coeffs[0]
        for t in points:
            v = obj_eval(c, t) if self.symbolic else c
            if not np.any(np.abs(v) > 1e-12):
                flagged.append(t)
        return flagged

    def at(self, t) -> MatrixLaurentSeries:
        """Numeric series at the parameter point t."""
        if not self.symbolic and not isinstance(self.center, ParamRational):
            return self
        t = as_point(t, self.r)
        if self.symbolic:
            coeffs = np.stack([obj_eval(c, t) for c in self.coeffs])
        else:
            coeffs = self.coeffs
        center = self.center.eval(t) if isinstance(self.center, ParamRational) else self.center
        return MatrixLaurentSeries(center, self.low, coeffs, self.truncation)

    def center_at(self, t=None):
        if isinstance(self.center, ParamRational):
            return self.center.eval(t)
        return self.center

    def evaluate(self, x, t=None) -> np.ndarray:
        """Sum the stored coefficients at the point x (u = 1/x at infinity)."""
        s = self.at(t) if (self.symbolic or isinstance(self.center, ParamRational)) else self
        if s.center == INFINITY:
            u = 1.0 / complex(x)
        else:
            u = complex(x) - s.center
        powers = u ** np.arange(s.low, s.high + 1, dtype=float)
        return np.tensordot(powers, s.coeffs, axes=(0, 0))

    def truncate(self, order) -> MatrixLaurentSeries:
        order = min(order, self.truncation)
        return MatrixLaurentSeries(self.center, self.low, self.coeffs[: max(0, order - self.low + 1)], order, r=self.r)

    def trim(self) -> MatrixLaurentSeries:
        """Drop structurally zero leading coefficients (reindexes ``low``)."""
        v = self.valuation()
        if v == math.inf or v == self.low:
            return self
        return MatrixLaurentSeries(self.center, v, self.coeffs[v - self.low :], self.truncation, r=self.r)

    def shift(self, k: int) -> MatrixLaurentSeries:
        """Multiply by u**k."""
        return MatrixLaurentSeries(self.center, self.low + k, self.coeffs, self.truncation + k, r=self.r)

    def derivative(self) -> MatrixLaurentSeries:
        """d/du, coefficientwise."""
        orders = np.arange(self.low, self.high + 1)
        coeffs = self._scaled(orders)
        s = MatrixLaurentSeries(self.center, self.low - 1, coeffs, self.truncation - 1, r=self.r)
        return s

    def _scaled(self, factors) -> np.ndarray:
        if self.symbolic:
            out = self.coeffs.copy()
            for k, f in enumerate(factors):
                out[k] = self.coeffs[k] * int(f) if f != 0 else obj_zeros((self.n, self.n), self.r or 1)
            return out
        return self.coeffs * np.asarray(factors, dtype=float)[:, None, None]

    def entry(self, i: int, j: int) -> MatrixLaurentSeries:
        return MatrixLaurentSeries(self.center, self.low, self.coeffs[:, i : i + 1, j : j + 1], self.truncation, r=self.r)

    def max_abs_coeff(self) -> float:
        c = self.coeffs if not self.symbolic else None
        if c is None:
            raise TypeError("evaluate a symbolic series with at(t) first")
        return float(np.max(np.abs(c))) if c.size else 0.0

    # -- arithmetic -------------------------------------------------------------
    def _compatible(self, other: MatrixLaurentSeries):
        if not isinstance(other, MatrixLaurentSeries):
            raise TypeError("expected a MatrixLaurentSeries")
        if not _centers_equal(self.center, other.center):
            raise CenterMismatch(f"centers {self.center!r} and {other.center!r} differ")
        if other.n != self.n:
            raise CenterMismatch("series have different matrix dimensions")
        if self.symbolic != other.symbolic:
            raise TypeError("cannot mix symbolic and numeric series; use at(t)")

    def __add__(self, other):
        self._compatible(other)
        low = min(self.low, other.low)
        trunc = min(self.truncation, other.truncation)
        high = max(self.high, other.high) if trunc == math.inf else trunc
        k = high - low + 1
        out = self._zeros_like(self.coeffs, (k, self.n, self.n), self.r)
        for s in (self, other):
            top = min(s.high, high)
            if top >= s.low:
                out[s.low - low : top - low + 1] = out[s.low - low : top - low + 1] + s.coeffs[: top - s.low + 1]
        return MatrixLaurentSeries(self.center, low, out, trunc, r=self.r)

    def __neg__(self):
        return MatrixLaurentSeries(self.center, self.low, -self.coeffs, self.truncation, r=self.r)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> MatrixLaurentSeries:
        return MatrixLaurentSeries(self.center, self.low, self.coeffs * c, self.truncation, r=self.r)

    def __matmul__(self, other: MatrixLaurentSeries) -> MatrixLaurentSeries:
        self._compatible(other)
        vs, vt = self.valuation(), other.valuation()
        trunc = min(self.truncation + vt, other.truncation + vs)
        low = self.low + other.low
        if trunc == math.inf:
            high = self.high + other.high
        else:
            high = trunc
        if high < low:
            raise InsufficientTruncation("product has no valid coefficients")
        k = high - low + 1
        if self.symbolic:
            out = obj_zeros((k, self.n, self.n), self.r or 1)
            for i in range(self.coeffs.shape[0]):
                a = self.coeffs[i]
                if _is_zero(a):
                    continue
                for j in range(other.coeffs.shape[0]):
                    o = i + j
                    if o >= k:
                        break
                    b = other.coeffs[j]
                    if not _is_zero(b):
                        out[o] = out[o] + obj_matmul(a, b, self.r or 1)
        else:
            out = np.zeros((k, self.n, self.n), dtype=complex)
            kt = other.coeffs.shape[0]
            for i in range(min(self.coeffs.shape[0], k)):
                a = self.coeffs[i]
                if not np.any(a):
                    continue
                m = min(kt, k - i)
                out[i : i + m] += np.matmul(a, other.coeffs[:m])
        return MatrixLaurentSeries(self.center, low, out, trunc, r=self.r)

    def invert(self, truncation=None) -> MatrixLaurentSeries:
        return invert(self, truncation)

    def delta(self) -> MatrixLaurentSeries:
        return delta_apply(self)

    # -- serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        if isinstance(self.center, ParamRational):
            center = self.center.to_json()
        elif self.center == INFINITY:
            center = INFINITY
        else:
            center = complex_to_json(self.center)
        if self.symbolic:
            coeffs = [[[e.to_json() for e in row] for row in c] for c in self.coeffs]
        else:
            coeffs = [[[complex_to_json(v) for v in row] for row in c] for c in self.coeffs]
        return {
            "center": center,
            "lowOrder": self.low,
            "truncation": None if self.exact else self.truncation,
            "coeffs": coeffs,
        }

    @classmethod
    def from_json(cls, data, r: int | None = None):
        center = data["center"]
        if center == INFINITY:
            pass
        elif isinstance(center, dict) or isinstance(center, str):
            center = ParamRational.from_json(center, r or 1)
        else:
            center = parse_complex(center)
        coeffs = data["coeffs"]
        symbolic = r is not None
        if symbolic:
            arr = np.stack([ParamMatrix.from_json(c, r).entries for c in coeffs])
        else:
            arr = np.array([[[parse_complex(v) for v in row] for row in c] for c in coeffs], dtype=complex)
        trunc = data.get("truncation")
        return cls(center, data["lowOrder"], arr, math.inf if trunc is None else trunc, r=r)

    def __repr__(self):
        return (
            f"MatrixLaurentSeries(n={self.n}, low={self.low}, truncation={self.truncation}, "
            f"center={self.center!r}, symbolic={self.symbolic})"
        )


def _mat_inverse(c, r):
    if c.dtype == object:
        return obj_inverse(c, r or 1)
    return np.linalg.inv(c)


def _leading_invertible(c, r) -> bool:
    if c.dtype == object:
        for pt in random_points(r or 1, 3, seed=99):
            try:
                if abs(np.linalg.det(obj_eval(c, pt))) > 1e-10:
                    return True
            except ZeroDivisionError:
                continue
        return False
    sv = np.linalg.svd(c, compute_uv=False)
    return sv[-1] > 1e-12 * max(sv[0], 1e-300)


def _scalar_series(s: MatrixLaurentSeries) -> MatrixLaurentSeries:
    return s.trim() if s.valuation() != math.inf else s


def _det_series(entries):
    """Cofactor expansion over scalar (1x1) series."""
    n = len(entries)
    if n == 1:
        return entries[0][0]
    total = None
    for j in range(n):
        e = entries[0][j]
        if e.valuation() == math.inf:
            continue
        minor = [[entries[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = e @ _det_series(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        return entries[0][0]
    return total


def invert(S: MatrixLaurentSeries, truncation=None) -> MatrixLaurentSeries:
    """Inverse Laurent series.

    Uses the leading-coefficient recurrence when the first nonzero
    coefficient is invertible, and the adjugate/determinant formula otherwise
    (n <= 5).  Exact inputs need ``truncation`` unless the inverse is itself
    a monomial.
    """
    v = S.valuation(rtol=0.0)
    if v == math.inf:
        raise SingularLeadingCoefficient("cannot invert the zero series")
    lead = S.coeff(v)
    if _leading_invertible(lead, S.r):
        linv = _mat_inverse(lead, S.r)
        if S.exact:
            if S.high == v and truncation is None:
                return MatrixLaurentSeries(S.center, -v, linv[None], math.inf, r=S.r)
            out_trunc = truncation if truncation is not None else -v + DEFAULT_INVERSE_ORDERS
        else:
            out_trunc = S.truncation - 2 * v
            if truncation is not None:
                out_trunc = min(out_trunc, truncation)
        k = out_trunc - (-v) + 1
        if k <= 0:
            raise InsufficientTruncation("no valid coefficients in the inverse")
        if S.symbolic:
            mm = lambda a, b: obj_matmul(a, b, S.r or 1)  # noqa: E731
        else:
            mm = np.matmul
        R = [linv]
        for j in range(1, k):
            acc = None
            for i in range(1, j + 1):
                o = v + i
                if o > S.high:
                    break
                c = S.coeffs[o - S.low]
                if _is_zero(c):
                    continue
                term = mm(c, R[j - i])
                acc = term if acc is None else acc + term
            if acc is None:
                R.append(S._zero_mat())
            else:
                R.append(-mm(linv, acc))
        return MatrixLaurentSeries(S.center, -v, np.stack(R), out_trunc, r=S.r)

    n = S.n
    if n > 5:
        raise SingularLeadingCoefficient("leading coefficient is singular and n > 5")
    if S.exact:
        span = truncation if truncation is not None else DEFAULT_INVERSE_ORDERS
        S = S.truncate(S.low + span + 4 * (S.high - S.low + 1))
    entries = [[_scalar_series(S.entry(i, j)) for j in range(n)] for i in range(n)]
    det = _det_series(entries)
    if det.valuation() == math.inf:
        raise SingularLeadingCoefficient("series matrix is singular (zero determinant)")
    det = det.trim()
    if not _leading_invertible(det.coeff(det.low), S.r):
        raise SingularLeadingCoefficient("determinant has a vanishing leading coefficient")
    det_inv = invert(det)
    blocks = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[entries[a][b] for b in range(n) if b != i] for a in range(n) if a != j]
            cof = _det_series(minor) if n > 1 else MatrixLaurentSeries.identity(1, S.center, symbolic=S.symbolic, r=S.r or 1)
            if (i + j) % 2:
                cof = -cof
            blocks[i][j] = cof @ det_inv
    low = min(b.low for row in blocks for b in row)
    trunc = min(b.truncation for row in blocks for b in row)
    if truncation is not None:
        trunc = min(trunc, truncation)
    if trunc < low:
        raise InsufficientTruncation("not enough truncation to invert this series")
    k = trunc - low + 1
    out = S._zeros_like(S.coeffs, (k, n, n), S.r)
    for i in range(n):
        for j in range(n):
            b = blocks[i][j]
            for o in range(max(b.low, low), min(b.high, trunc) + 1):
                out[o - low, i, j] = b.coeffs[o - b.low, 0, 0]
    return MatrixLaurentSeries(S.center, low, out, trunc, r=S.r).trim()


def series_arith(op: str, S: MatrixLaurentSeries, T: MatrixLaurentSeries | None = None):
    """Dispatch ``add``, ``sub``, ``mul`` or ``invert``."""
    if op == "add":
        return S + T
    if op == "sub":
        return S - T
    if op == "mul":
        return S @ T
    if op == "invert":
        return invert(S)
    raise ValueError(f"unknown series operation {op!r}")


def delta_apply(S: MatrixLaurentSeries) -> MatrixLaurentSeries:
    """Euler operator u d/du: the order-i coefficient is multiplied by i."""
    if S.center == INFINITY:
        raise ValueError("delta is defined for finite centers")
    orders = np.arange(S.low, S.high + 1)
    return MatrixLaurentSeries(S.center, S.low, S._scaled(orders), S.truncation, r=S.r)


def estimate_radius(S: MatrixLaurentSeries, t=None, window: int = 8) -> float:
    """Heuristic convergence radius of the regular part.

    Ratio test over the last ``window`` coefficient norms; when the ratios
    oscillate (or some coefficients vanish) a least-squares fit of
    ``log |c_k|`` against k (root test) is used instead.  Only meant for
    step-size safety margins.
    """
    if S.exact:
        return math.inf
    if S.truncation < S.low + window:
        raise InsufficientTruncation(f"need truncation >= lowOrder + {window} for a radius estimate")
    s = S.at(t) if (S.symbolic or isinstance(S.center, ParamRational)) else S
    start = max(0, s.low)
    norms = np.array([np.linalg.norm(s.coeff(k)) for k in range(start, s.truncation + 1)])
    if norms.size == 0 or not np.any(norms):
        return math.inf
    scale = norms.max()
    tail = norms[-window:]
    orders = np.arange(s.truncation + 1 - tail.size, s.truncation + 1)
    nz = tail > 1e-14 * scale
    if not np.any(nz):
        return math.inf
    if np.all(nz):
        ratios = tail[:-1] / tail[1:]
        if ratios.max() <= 1.5 * ratios.min():
            return float(np.exp(np.mean(np.log(ratios[-3:]))))
    k, logs = orders[nz], np.log(tail[nz])
    if k.size == 1:
        return float(np.exp(-logs[0] / k[0])) if k[0] > 0 else math.inf
    slope = np.polyfit(k, logs, 1)[0]
    return float(np.exp(-slope))


__all__ = [
    "INFINITY",
    "MatrixLaurentSeries",
    "delta_apply",
    "estimate_radius",
    "invert",
    "series_arith",
]
