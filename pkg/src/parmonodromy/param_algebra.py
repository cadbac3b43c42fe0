"""Rational functions of the parameter tuple t = (t1, ..., tr).

Everything that depends on t (pole locations, matrix coefficients) is a
:class:`ParamRational`: a quotient of two multivariate polynomials with
complex coefficients.  No gcd simplification is attempted; all contracts are
stated through evaluation.
"""
from __future__ import annotations

import ast
import math
import numbers

import numpy as np

from .errors import DivisionByZeroFunction, PoleAtParameter

# relative threshold below which a term produced by cancellation is dropped
_CANCEL_RTOL = 1e-15
# scale-aware zero test for denominators
EPS_DEN = 1e-12


def as_point(t, r: int | None = None) -> tuple:
    """Normalize a parameter point to a tuple of complex numbers."""
    if isinstance(t, numbers.Number):
        t = (t,)
    pt = tuple(complex(c) for c in t)
    if not pt:
        raise ValueError("parameter points need at least one coordinate")
    if r is not None and len(pt) != r:
        raise ValueError(f"expected a parameter point with {r} coordinates, got {len(pt)}")
    return pt


class Poly:
    """Sparse multivariate polynomial ``{exponents: coeff}`` in r variables."""

    __slots__ = ("r", "terms")

    def __init__(self, terms: dict | None, r: int):
        self.r = r
        clean = {}
        for e, c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                e = tuple(int(k) for k in e)
                if len(e) != r or min(e, default=0) < 0:
                    raise ValueError(f"bad exponent vector {e} for r={r}")
                clean[e] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def constant(cls, c, r):
        return cls({(0,) * r: c}, r)

    @classmethod
    def variable(cls, k, r):
        e = [0] * r
        e[k] = 1
        return cls({tuple(e): 1.0}, r)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> complex:
        return self.terms.get((0,) * self.r, 0j)

    def _check(self, other):
        if other.r != self.r:
            raise ValueError("polynomials in different numbers of parameters")

    def __add__(self, other: Poly) -> Poly:
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                a = out[e]
                s = a + c
                if abs(s) <= _CANCEL_RTOL * max(abs(a), abs(c)):
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        return Poly(out, self.r)

    def __neg__(self) -> Poly:
        return Poly({e: -c for e, c in self.terms.items()}, self.r)

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def scale(self, c) -> Poly:
        c = complex(c)
        if c == 0:
            return Poly({}, self.r)
        return Poly({e: c * v for e, v in self.terms.items()}, self.r)

    def __mul__(self, other: Poly) -> Poly:
        self._check(other)
        if len(other.terms) == 1 and other.is_constant():
            return self.scale(other.constant_value())
        if len(self.terms) == 1 and self.is_constant():
            return other.scale(self.constant_value())
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0j) + c1 * c2
        return Poly(out, self.r)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.r == other.r and self.terms == other.terms

    def __hash__(self):
        return hash((self.r, tuple(self.terms.items())))

    def eval_terms(self, t: tuple) -> tuple[complex, float]:
        """Value at t and the magnitude of the largest monomial."""
        total = 0j
        biggest = 0.0
        for e, c in self.terms.items():
            m = c
            for tj, k in zip(t, e):
                if k:
                    m = m * tj**k
            total += m
            biggest = max(biggest, abs(m))
        return total, biggest

    def __call__(self, t) -> complex:
        return self.eval_terms(t)[0]

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def to_json(self) -> list:
        return [{"exponents": list(e), "coeff": [c.real, c.imag]} for e, c in self.terms.items()]

    @classmethod
    def from_json(cls, data, r):
        terms: dict = {}
        for term in data:
            e = tuple(term["exponents"])
            terms[e] = terms.get(e, 0j) + parse_complex(term["coeff"])
        return cls(terms, r)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(f"t{j + 1}" + (f"^{k}" if k > 1 else "") for j, k in enumerate(e) if k)
            cs = _fmt_complex(c)
            parts.append(cs if not mono else (mono if c == 1 else f"{cs}*{mono}"))
        return " + ".join(parts)


def _fmt_complex(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:g}"
    return f"({c.real:g}{c.imag:+g}j)"


def parse_complex(v) -> complex:
    """Accept ``[re, im]`` pairs, plain numbers, or complex."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex numbers serialize as [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, numbers.Number):
        return complex(v)
    raise ValueError(f"cannot read a complex number from {v!r}")


def complex_to_json(c) -> list:
    c = complex(c)
    return [c.real, c.imag]


class ParamRational:
    """Quotient ``num / den`` of polynomials in t; immutable."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.constant(1.0, num.r)
        if num.r != den.r:
            raise ValueError("numerator and denominator disagree on r")
        if den.is_zero():
            raise DivisionByZeroFunction("denominator is identically zero")
        # normalize a constant denominator away
        if den.is_constant() and den.constant_value() != 1:
            num = num.scale(1.0 / den.constant_value())
            den = Poly.constant(1.0, num.r)
        self.num = num
        self.den = den

    @property
    def r(self) -> int:
        return self.num.r

    @classmethod
    def const(cls, c, r: int = 1) -> ParamRational:
        return cls(Poly.constant(c, r))

    @classmethod
    def var(cls, k: int, r: int = 1) -> ParamRational:
        """The coordinate function t_{k+1} (0-based k)."""
        return cls(Poly.variable(k, r))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def _coerce(self, other) -> ParamRational:
        if isinstance(other, ParamRational):
            if other.r != self.r:
                raise ValueError("rational functions in different numbers of parameters")
            return other
        if isinstance(other, numbers.Number):
            return ParamRational.const(other, self.r)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.den == other.den:
            return ParamRational(self.num + other.num, self.den)
        return ParamRational(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return ParamRational(-self.num, self.den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return ParamRational.const(0, self.r)
        return ParamRational(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def reciprocal(self) -> ParamRational:
        if self.is_zero():
            raise DivisionByZeroFunction("division by the zero function")
        return ParamRational(self.den, self.num)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, numbers.Integral):
            raise TypeError("only integer powers of rational functions are supported")
        base = self if k >= 0 else self.reciprocal()
        out = ParamRational.const(1, self.r)
        for _ in range(abs(int(k))):
            out = out * base
        return out

    def scale(self, c) -> ParamRational:
        return ParamRational(self.num.scale(c), self.den)

    def __call__(self, t) -> complex:
        return self.eval(t)

    def eval(self, t) -> complex:
        t = as_point(t, self.r)
        d, dmax = self.den.eval_terms(t)
        if abs(d) <= EPS_DEN * (1.0 + dmax):
            raise PoleAtParameter(f"denominator of {self!r} vanishes at t={t}")
        return self.num(t) / d

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data, r: int) -> ParamRational:
        """Read ``{num, den}``, a number, a ``[re, im]`` pair or an expression string."""
        if isinstance(data, ParamRational):
            return data
        if isinstance(data, dict):
            num = Poly.from_json(data["num"], r)
            den = Poly.from_json(data["den"], r) if "den" in data else None
            return cls(num, den)
        if isinstance(data, str):
            return parse_param(data, r)
        return cls.const(parse_complex(data), r)

    def __repr__(self):
        if self.den.is_constant():
            return f"ParamRational({self.num!r})"
        return f"ParamRational(({self.num!r}) / ({self.den!r}))"


def ratfun_arith(op: str, f, g=None) -> ParamRational:
    """Dispatch ``add``, ``sub``, ``mul``, ``div`` or ``scale`` (g a number)."""
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    if op == "div":
        return f / g
    if op == "scale":
        return f.scale(g)
    raise ValueError(f"unknown operation {op!r}")


def peval(f, t) -> complex:
    """Evaluate a ParamRational or plain number at t."""
    if isinstance(f, ParamRational):
        return f.eval(t)
    return complex(f)


def parse_param(text: str, r: int = 1) -> ParamRational:
    """Parse an arithmetic expression in t1..tr (``t`` when r == 1).

    >>> parse_param("(t^2 + 1)/(t - 2)").eval((1j,))
    0j
    """
    tree = ast.parse(text.replace("^", "**"), mode="eval")

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, numbers.Number):
            return ParamRational.const(node.value, r)
        if isinstance(node, ast.Name):
            name = node.id
            if name == "t" and r == 1:
                return ParamRational.var(0, r)
            if name in ("I", "i", "j"):
                return ParamRational.const(1j, r)
            if name.startswith("t") and name[1:].isdigit():
                k = int(name[1:])
                if 1 <= k <= r:
                    return ParamRational.var(k - 1, r)
            raise ValueError(f"unknown symbol {name!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                exp = node.right
                sign = 1
                if isinstance(exp, ast.UnaryOp) and isinstance(exp.op, ast.USub):
                    sign, exp = -1, exp.operand
                if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)):
                    raise ValueError("exponents must be integer literals")
                return walk(node.left) ** (sign * exp.value)
            a, b = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a / b
        raise ValueError(f"unsupported syntax in parameter expression {text!r}")

    return walk(tree)


class ParamMatrix:
    """Square matrix of ParamRational entries, stored as an object ndarray."""

    __slots__ = ("entries", "r")

    def __init__(self, rows, r: int | None = None):
        arr = np.asarray(rows, dtype=object)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError("ParamMatrix must be square with n >= 1")
        if r is None:
            r = next((e.r for e in arr.flat if isinstance(e, ParamRational)), 1)
        out = np.empty(arr.shape, dtype=object)
        for idx, e in np.ndenumerate(arr):
            out[idx] = e if isinstance(e, ParamRational) else ParamRational.from_json(e, r)
        self.entries = out
        self.r = r

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, n, r=1):
        return cls([[0] * n for _ in range(n)], r)

    @classmethod
    def identity(cls, n, r=1):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], r)

    @classmethod
    def constant(cls, a, r=1):
        a = np.asarray(a, dtype=complex)
        return cls([[complex(v) for v in row] for row in a], r)

    def eval(self, t) -> np.ndarray:
        t = as_point(t, self.r)
        out = np.empty(self.entries.shape, dtype=complex)
        for idx, e in np.ndenumerate(self.entries):
            out[idx] = e.eval(t)
        return out

    __call__ = eval

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries.flat)

    def __add__(self, other):
        return ParamMatrix(self.entries + _entries(other, self.r), self.r)

    def __sub__(self, other):
        return ParamMatrix(self.entries - _entries(other, self.r), self.r)

    def __neg__(self):
        return ParamMatrix(-self.entries, self.r)

    def __matmul__(self, other):
        return ParamMatrix(obj_matmul(self.entries, _entries(other, self.r), self.r), self.r)

    def __mul__(self, c):
        return ParamMatrix(self.entries * c, self.r)

    __rmul__ = __mul__

    def inverse(self, ref_point=None) -> ParamMatrix:
        return ParamMatrix(obj_inverse(self.entries, self.r, ref_point), self.r)

    def to_json(self) -> list:
        return [[e.to_json() for e in row] for row in self.entries]

    @classmethod
    def from_json(cls, data, r):
        return cls([[ParamRational.from_json(e, r) for e in row] for row in data], r)

    def __repr__(self):
        return f"ParamMatrix({self.entries.tolist()!r})"


def _entries(m, r):
    if isinstance(m, ParamMatrix):
        return m.entries
    return ParamMatrix(m, r).entries


def obj_zeros(shape, r: int) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    zero = ParamRational.const(0, r)
    for idx in np.ndindex(*shape):
        out[idx] = zero
    return out


def obj_identity(n: int, r: int) -> np.ndarray:
    out = obj_zeros((n, n), r)
    one = ParamRational.const(1, r)
    for i in range(n):
        out[i, i] = one
    return out


def obj_matmul(a: np.ndarray, b: np.ndarray, r: int) -> np.ndarray:
    """Matrix product of object arrays that skips structurally zero terms."""
    n, k = a.shape
    k2, m = b.shape
    if k != k2:
        raise ValueError("shape mismatch")
    out = obj_zeros((n, m), r)
    for i in range(n):
        for j in range(m):
            acc = out[i, j]
            for l in range(k):
                x, y = a[i, l], b[l, j]
                if not (x.is_zero() or y.is_zero()):
                    acc = acc + x * y
            out[i, j] = acc
    return out


def random_points(r: int, count: int, seed: int = 0, radius: float = 1.0) -> list[tuple]:
    """Deterministic pseudo-random parameter points in a polydisk."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        rad = radius * np.sqrt(rng.uniform(0.05, 1.0, r))
        ang = rng.uniform(0, 2 * np.pi, r)
        pts.append(tuple(complex(v) for v in rad * np.exp(1j * ang)))
    return pts


def obj_eval(a: np.ndarray, t) -> np.ndarray:
    out = np.empty(a.shape, dtype=complex)
    for idx, e in np.ndenumerate(a):
        out[idx] = e.eval(t)
    return out


def obj_inverse(a: np.ndarray, r: int, ref_point=None) -> np.ndarray:
    """Gauss-Jordan inverse over ParamRational.

    Pivots are chosen by magnitude at ``ref_point`` (a generic random point by
    default), so a structurally nonzero pivot is used whenever one exists.
    """
    n = a.shape[0]
    if ref_point is None:
        ref_point = random_points(r, 1, seed=12345)[0]
    work = np.concatenate([a.copy(), obj_identity(n, r)], axis=1)
    for col in range(n):
        best, best_val = None, 0.0
        for row in range(col, n):
            e = work[row, col]
            if e.is_zero():
                continue
            try:
                v = abs(e.eval(ref_point))
            except PoleAtParameter:
                v = 0.0
            if best is None or v > best_val:
                best, best_val = row, v
        if best is None or best_val == 0.0:
            raise DivisionByZeroFunction("matrix is singular as a function of t")
        if best != col:
            work[[col, best]] = work[[best, col]]
        piv = work[col, col].reciprocal()
        work[col] = np.array([e * piv for e in work[col]], dtype=object)
        for row in range(n):
            if row != col and not work[row, col].is_zero():
                f = work[row, col]
                work[row] = np.array(
                    [x - f * y for x, y in zip(work[row], work[col])], dtype=object
                )
    return work[:, n:]


def to_param_array(m, r: int) -> np.ndarray:
    """Coerce a nested list / ParamMatrix / numeric array into an object array."""
    if isinstance(m, ParamMatrix):
        return m.entries
    return ParamMatrix(m, r).entries


def binom(n: int, k: int) -> float:
    """Generalized binomial coefficient C(n, k) for integer n (possibly negative)."""
    if k < 0:
        return 0.0
    if n >= 0:
        return float(math.comb(n, k)) if k <= n else 0.0
    # C(-m, k) = (-1)^k C(m + k - 1, k)
    m = -n
    return float((-1) ** k * math.comb(m + k - 1, k))


def poly_from_coeffs(coeffs: Iterable, r: int = 1) -> ParamRational:
    """Univariate helper: ``sum c_k t1^k``."""
    terms = {}
    for k, c in enumerate(coeffs):
        e = [0] * r
        e[0] = k
        terms[tuple(e)] = c
    return ParamRational(Poly(terms, r))


__all__ = [
    "EPS_DEN",
    "ParamMatrix",
    "ParamRational",
    "Poly",
    "as_point",
    "binom",
    "complex_to_json",
    "obj_eval",
    "obj_identity",
    "obj_inverse",
    "obj_matmul",
    "obj_zeros",
    "parse_complex",
    "parse_param",
    "peval",
    "poly_from_coeffs",
    "random_points",
    "ratfun_arith",
    "to_param_array",
]
