"""Truncated Taylor series in one variable (forward-mode derivatives).

A :class:`Jet` holds c_0..c_{K-1} of f(x0 + h) = sum c_k h^k.  Functions
written with ordinary arithmetic and the helpers below (``exp``, ``log``,
``sqrt``, ``power``) evaluate to jets when given ``Jet.variable(x0, K)``.
"""
from __future__ import annotations

import math
import numbers

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 1000

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)

    @classmethod
    def variable(cls, x0, K: int):
        c = np.zeros(K, dtype=complex)
        c[0] = x0
        if K > 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, v, K: int):
        c = np.zeros(K, dtype=complex)
        c[0] = v
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.size

    @property
    def value(self) -> complex:
        return complex(self.c[0])

    def derivative(self, k: int) -> complex:
        return complex(self.c[k]) * math.factorial(k)

    def derivatives(self) -> np.ndarray:
        return self.c * np.array([math.factorial(k) for k in range(self.c.size)], dtype=float)

    def _lift(self, other):
        if isinstance(other, Jet):
            if other.c.size != self.c.size:
                raise ValueError("jets of different orders")
            return other
        if isinstance(other, numbers.Number) or np.ndim(other) == 0:
            return Jet.constant(complex(other), self.c.size)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else Jet(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else Jet(self.c - o.c)

    def __rsub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else Jet(o.c - self.c)

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return Jet(self.c * other)
        o = self._lift(other)
        if o is NotImplemented:
            return o
        K = self.c.size
        return Jet(np.convolve(self.c, o.c)[:K])

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        if a[0] == 0:
            raise ZeroDivisionError("jet with zero constant term")
        K = a.size
        b = np.zeros(K, dtype=complex)
        b[0] = 1.0 / a[0]
        for k in range(1, K):
            b[k] = -np.dot(a[1 : k + 1], b[k - 1 :: -1][:k]) / a[0]
        return Jet(b)

    def __truediv__(self, other):
        if isinstance(other, numbers.Number):
            return Jet(self.c / other)
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else o * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, numbers.Integral):
            if p < 0:
                return self.reciprocal() ** (-p)
            out = Jet.constant(1.0, self.c.size)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return power(self, p)

    # numpy ufunc hooks (np.exp(jet) etc. dispatch to these)
    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return sqrt(self)

    def __repr__(self):
        return f"Jet({self.c!r})"


def _deriv_coeffs(c):
    return c[1:] * np.arange(1, c.size)


def exp(f):
    if not isinstance(f, Jet):
        return np.exp(f)
    a = f.c
    K = a.size
    b = np.zeros(K, dtype=complex)
    b[0] = np.exp(a[0])
    da = _deriv_coeffs(a)
    # b' = a' b  ->  k b_k = sum_{j=1}^{k} j a_j b_{k-j}
    for k in range(1, K):
        b[k] = np.dot(da[:k], b[k - 1 :: -1][:k]) / k
    return Jet(b)


def log(f):
    if not isinstance(f, Jet):
        return np.log(f)
    a = f.c
    K = a.size
    b = np.zeros(K, dtype=complex)
    b[0] = np.log(a[0])
    # a b' = a'  ->  k a_0 b_k = k a_k - sum_{j=1}^{k-1} j b_j a_{k-j}
    for k in range(1, K):
        s = k * a[k] - sum(j * b[j] * a[k - j] for j in range(1, k))
        b[k] = s / (k * a[0])
    return Jet(b)


def power(f, p):
    if not isinstance(f, Jet):
        return np.power(complex(f), p)
    return exp(log(f) * p)


def sqrt(f):
    return power(f, 0.5) if isinstance(f, Jet) else np.sqrt(f)


def taylor_of(fun, x0, K: int, *args) -> np.ndarray:
    """Taylor coefficients of fun(x, *args) at x0, orders 0..K-1."""
    out = fun(Jet.variable(complex(x0), K), *args)
    if isinstance(out, Jet):
        return out.c
    return Jet.constant(complex(out), K).c


__all__ = ["Jet", "exp", "log", "power", "sqrt", "taylor_of"]
