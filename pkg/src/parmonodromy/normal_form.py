"""Reduction of a Fuchsian local system to constant coefficients.

A local system is given in delta-form, ``delta Y = A(x) Y`` with
``delta = (x - alpha) d/dx`` and ``A = sum_{i>=0} (x - alpha)^i A_i``.
The gauge ``Z = P Y`` with ``P = I + sum_{i>=1} (x - alpha)^i P_i`` turns it
into ``delta Z = A_0 Z`` as long as no two eigenvalues of ``A_0`` differ by a
positive integer; otherwise a sequence of shearing gauges first moves the
eigenvalues apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    EigenvalueClusterAmbiguity,
    EvaluationFailure,
    InsufficientTruncation,
    InvalidLocalSystem,
    ResonantEigenvalues,
)
from .param_algebra import ParamMatrix, as_point, complex_to_json
from .series import MatrixLaurentSeries, invert

# absolute band deciding "differs by a positive integer"
EPS_INT = 1e-8
# band in which an eigenvalue gap is too close to an integer to decide
EPS_AMBIGUOUS = 1e-6
# eigenvalues closer than this are one cluster
CLUSTER_TOL = 1e-6
DEFAULT_TRUNCATION = 20


class FuchsLocalSystem:
    """delta Y = (sum_{i>=0} (x - alpha)^i A_i) Y."""

    def __init__(self, series: MatrixLaurentSeries):
        if series.low < 0:
            v = series.valuation()
            if v < 0:
                raise InvalidLocalSystem("a Fuchsian local system has no negative orders in delta-form")
            series = MatrixLaurentSeries(series.center, 0, series.coeffs[-series.low :], series.truncation, r=series.r)
        elif series.low > 0:
            series = MatrixLaurentSeries(
                series.center,
                0,
                np.concatenate([np.zeros((series.low,) + series.coeffs.shape[1:], dtype=series.coeffs.dtype)
                                if series.coeffs.dtype != object else series._zeros_like(series.coeffs, (series.low, series.n, series.n), series.r),
                                series.coeffs]),
                series.truncation,
                r=series.r,
            )
        if series.truncation < 0:
            raise InsufficientTruncation("need at least the order-0 coefficient")
        a0 = series.coeff(0)
        if series.symbolic:
            zero = all(e.is_zero() for e in a0.flat)
        else:
            zero = not np.any(np.abs(a0) > 0)
        if zero:
            raise InvalidLocalSystem("A_0 is identically zero")
        self.series = series

    @property
    def n(self):
        return self.series.n

    @property
    def center(self):
        return self.series.center

    def at(self, t=None) -> MatrixLaurentSeries:
        if self.series.symbolic or not isinstance(self.series.center, complex):
            if t is None:
                raise ValueError("a parameter point is needed for a symbolic system")
            return self.series.at(t)
        return self.series

    @classmethod
    def from_system(cls, sys, pole_index: int, N: int = DEFAULT_TRUNCATION, t=None):
        """delta-form of a simple pole of a LinearSystem: (x - alpha) A(x)."""
        if sys.poles[pole_index].order != 1:
            raise InvalidLocalSystem("pole is not simple; transform it with a witness gauge first")
        return cls(sys.localize(pole_index, N - 1, t).shift(1))

    @classmethod
    def from_coefficients(cls, coeffs, center=0.0, truncation=None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if truncation is None:
            truncation = coeffs.shape[0] - 1
        return cls(MatrixLaurentSeries(center, 0, coeffs, truncation))


def _resonance_order(A0: np.ndarray, i: int):
    lam = np.linalg.eigvals(A0)
    d = lam[:, None] - lam[None, :] - i
    return float(np.min(np.abs(d)))


def sylvester_step(A0, i: int, R) -> np.ndarray:
    """Solve A0 X - X (A0 + i I) = R by Kronecker linearization."""
    A0 = np.asarray(A0, dtype=complex)
    R = np.asarray(R, dtype=complex)
    n = A0.shape[0]
    if _resonance_order(A0, i) <= EPS_INT:
        raise ResonantEigenvalues(i)
    eye = np.eye(n)
    M = np.kron(eye, A0) - np.kron((A0 + i * eye).T, eye)
    try:
        x = np.linalg.solve(M, R.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise ResonantEigenvalues(i) from exc
    return x.reshape(n, n, order="F")


def reduce_to_constant(F, t=None, N: int = DEFAULT_TRUNCATION):
    """Coefficients P_1..P_N of the gauge to delta Z = A_0 Z, and A_0(t).

    Solves A0 P_i - P_i (A0 + iI) = A_i + sum_{j=1}^{i-1} P_j A_{i-j}.
    """
    F = F if isinstance(F, FuchsLocalSystem) else FuchsLocalSystem(F)
    S = F.at(t)
    if N < 1:
        raise ValueError("N must be at least 1")
    if S.truncation < N:
        raise InsufficientTruncation(f"local system known through order {S.truncation} < {N}")
    A = [S.coeff(k) for k in range(N + 1)]
    A0 = A[0]
    P = [np.eye(F.n, dtype=complex)]
    for i in range(1, N + 1):
        R = A[i].copy()
        for j in range(1, i):
            R += P[j] @ A[i - j]
        P.append(sylvester_step(A0, i, R))
    return P[1:], A0


def gauge_series(P_list, center, n) -> MatrixLaurentSeries:
    coeffs = np.concatenate([np.eye(n, dtype=complex)[None], np.asarray(P_list, dtype=complex).reshape(-1, n, n)])
    return MatrixLaurentSeries(center, 0, coeffs, len(P_list))


# -- eigenvalue bookkeeping ---------------------------------------------------
def cluster_eigenvalues(lam, tol: float = CLUSTER_TOL) -> list[list[int]]:
    """Group indices of eigenvalues closer than ``tol`` (transitively)."""
    lam = np.asarray(lam)
    parent = list(range(len(lam)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(lam)):
        for j in range(i):
            if abs(lam[i] - lam[j]) <= tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(lam)):
        groups.setdefault(find(i), []).append(i)
    out = list(groups.values())
    out.sort(key=lambda g: (np.mean(lam[g]).real, np.mean(lam[g]).imag))
    return out


def integer_gap(a: complex, b: complex) -> int:
    """Positive integer m with b - a = m within EPS_INT, else 0.

    Raises EigenvalueClusterAmbiguity when b - a sits in the undecidable band
    around a positive integer.
    """
    d = b - a
    k = round(d.real)
    dist = abs(d - k)
    if k >= 1 and dist <= EPS_INT:
        return int(k)
    if k >= 1 and dist <= EPS_AMBIGUOUS:
        raise EigenvalueClusterAmbiguity(
            f"eigenvalue gap {d} is within {dist:.2e} of the integer {k}; cannot decide resonance"
        )
    return 0


def max_integer_gap(A0) -> int:
    lam = np.linalg.eigvals(np.asarray(A0, dtype=complex))
    best = 0
    for a in lam:
        for b in lam:
            d = b - a
            k = round(d.real)
            if k >= 1 and abs(d - k) <= EPS_INT:
                best = max(best, k)
    return best


def block_diagonalize(A0, tol: float = CLUSTER_TOL):
    """C with C A0 C^-1 block diagonal by eigenvalue cluster.

    Uses a reordered complex Schur form and Sylvester eliminations, so the
    blocks are upper triangular.  Returns (C, blocks) with blocks a list of
    index ranges in ascending order of eigenvalue real part.
    """
    A0 = np.asarray(A0, dtype=complex)
    n = A0.shape[0]
    lam = np.linalg.eigvals(A0)
    groups = cluster_eigenvalues(lam, tol)
    if len(groups) == 1:
        return np.eye(n, dtype=complex), [range(0, n)]
    first = lam[groups[0]]

    def pick(z):
        return bool(np.min(np.abs(first - z)) <= tol)

    T, Z, sdim = scipy.linalg.schur(A0, output="complex", sort=pick)
    k = len(groups[0])
    if sdim != k:
        raise EigenvalueClusterAmbiguity("Schur reordering could not isolate an eigenvalue cluster")
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    X = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    W_inv = np.eye(n, dtype=complex)
    W_inv[:k, k:] = -X
    C1 = W_inv @ Z.conj().T
    C2, sub = block_diagonalize(T22, tol)
    C = np.eye(n, dtype=complex)
    C[k:, k:] = C2
    blocks = [range(0, k)] + [range(b.start + k, b.stop + k) for b in sub]
    return C @ C1, blocks


def _conjugate(S: MatrixLaurentSeries, C, Cinv) -> MatrixLaurentSeries:
    coeffs = np.einsum("ij,kjl,lm->kim", C, S.coeffs, Cinv)
    return MatrixLaurentSeries(S.center, S.low, coeffs, S.truncation)


def _unit_shear(S: MatrixLaurentSeries, sel: np.ndarray) -> MatrixLaurentSeries:
    """Gauge by T = diag(u on sel, 1 elsewhere) for a low-0 delta-form series.

    Requires the (other, sel) block of A_0 to vanish; the truncation drops by 1.
    """
    oth = ~sel
    K = S.coeffs.shape[0]
    out = np.zeros_like(S.coeffs)
    ss = np.ix_(sel, sel)
    oo = np.ix_(oth, oth)
    so = np.ix_(sel, oth)
    os_ = np.ix_(oth, sel)
    for k in range(K):
        c = S.coeffs[k]
        out[k][ss] = c[ss]
        out[k][oo] = c[oo]
        if k + 1 < K:
            out[k + 1][so] = c[so]
        if k >= 1:
            out[k - 1][os_] = c[os_]
    out[0][ss] += np.eye(int(sel.sum()))
    return MatrixLaurentSeries(S.center, 0, out[: K - 1], S.truncation - 1)


def _shear_series(sel: np.ndarray, center, inverse=False) -> MatrixLaurentSeries:
    n = sel.size
    c = np.zeros((2, n, n), dtype=complex)
    idx_s, idx_o = np.flatnonzero(sel), np.flatnonzero(~sel)
    if inverse:
        # diag(u^-1 on sel, 1 elsewhere), low order -1
        c[0][idx_s, idx_s] = 1.0
        c[1][idx_o, idx_o] = 1.0
        return MatrixLaurentSeries(center, -1, c, math.inf)
    c[0][idx_o, idx_o] = 1.0
    c[1][idx_s, idx_s] = 1.0
    return MatrixLaurentSeries(center, 0, c, math.inf)


@dataclass
class ShearResult:
    C: np.ndarray  # first constant block-diagonalizing matrix
    exponents: list  # [(original eigenvalue, multiplicity, shift)]
    system: FuchsLocalSystem  # transformed, non-resonant
    G: MatrixLaurentSeries  # total gauge, Z = G Y
    Ginv: MatrixLaurentSeries
    iterations: int
    eigenvalue_log: list = field(default_factory=list)
    gap_log: list = field(default_factory=list)

    @property
    def S_exponents(self) -> list[int]:
        out = []
        for _, mult, shift in self.exponents:
            out.extend([shift] * mult)
        return out


def shearing(F, t0=None, max_iterations: int = 50) -> ShearResult:
    """Shear until no two eigenvalues of A_0 differ by a positive integer.

    Each iteration moves the lowest cluster of every integer-linked group of
    eigenvalues up to the next cluster of that group, one unit gauge
    ``diag((x - alpha) I, I)`` at a time, re-block-diagonalizing A_0 in
    between.  The number of distinct clusters per group drops every
    iteration, so the loop ends after at most n - 1 iterations.
    """
    F = F if isinstance(F, FuchsLocalSystem) else FuchsLocalSystem(F)
    S = F.at(t0)
    n = S.n
    center = S.center
    ident = MatrixLaurentSeries.identity(n, center)
    G, Ginv = ident, ident
    lam = np.linalg.eigvals(S.coeff(0))
    clusters = []
    for g in cluster_eigenvalues(lam):
        c = complex(np.mean(lam[g]))
        clusters.append({"origins": [(c, len(g))], "cur": c, "mult": len(g)})
    log = [np.sort_complex(lam)]
    gaps = [max_integer_gap(S.coeff(0))]
    C_first = np.eye(n, dtype=complex)
    iterations = 0
    while True:
        plan = _shear_plan(clusters)
        if not plan:
            break
        if iterations >= max_iterations:
            raise EigenvalueClusterAmbiguity("shearing did not terminate")
        iterations += 1
        steps = max(plan.values())
        for step in range(steps):
            active = [idx for idx, m in plan.items() if m > step]
            C, blocks = block_diagonalize(S.coeff(0))
            if iterations == 1 and step == 0:
                C_first = C
            Cinv = np.linalg.inv(C)
            S = _conjugate(S, C, Cinv)
            G = MatrixLaurentSeries.constant(C, center) @ G
            Ginv = Ginv @ MatrixLaurentSeries.constant(Cinv, center)
            lam_b = [complex(np.mean(np.diag(S.coeff(0))[list(b)])) for b in blocks]
            sel = np.zeros(n, dtype=bool)
            for idx in active:
                cur = clusters[idx]["cur"]
                j = int(np.argmin([abs(v - cur) for v in lam_b]))
                sel[list(blocks[j])] = True
                clusters[idx]["cur"] = cur + 1
            if S.truncation < 1:
                raise InsufficientTruncation("truncation exhausted during shearing")
            S = _unit_shear(S, sel)
            G = _shear_series(sel, center) @ G
            Ginv = Ginv @ _shear_series(sel, center, inverse=True)
        clusters = _merge_clusters(clusters)
        log.append(np.sort_complex(np.linalg.eigvals(S.coeff(0))))
        gaps.append(max_integer_gap(S.coeff(0)))
    exps = [(o, m, int(round((c["cur"] - o).real))) for c in clusters for o, m in c["origins"]]
    return ShearResult(C_first, exps, FuchsLocalSystem(S), G, Ginv, iterations, log, gaps)


def _shear_plan(clusters) -> dict:
    """Which clusters move up, and by how much, in this iteration."""
    vals = [c["cur"] for c in clusters]
    k = len(vals)
    links = {}
    for i in range(k):
        for j in range(k):
            if i != j:
                m = integer_gap(vals[i], vals[j])
                if m:
                    links.setdefault(i, []).append((m, j))
    # components of the integer-gap graph
    seen, plan = set(), {}
    for i in range(k):
        if i in seen or i not in links and not any(i in [j for _, j in v] for v in links.values()):
            continue
        comp, stack = set(), [i]
        while stack:
            a = stack.pop()
            if a in comp:
                continue
            comp.add(a)
            stack.extend(j for _, j in links.get(a, []))
            stack.extend(b for b, v in links.items() if any(j == a for _, j in v))
        seen |= comp
        lowest = min(comp, key=lambda a: vals[a].real)
        up = min(m for m, _ in links[lowest])
        plan[lowest] = up
    return plan


def _merge_clusters(clusters):
    """Clusters that met after a shift become one record; origins are kept."""
    out = []
    for c in clusters:
        for o in out:
            if abs(o["cur"] - c["cur"]) <= CLUSTER_TOL:
                o["origins"].extend(c["origins"])
                o["mult"] += c["mult"]
                break
        else:
            out.append({"origins": list(c["origins"]), "cur": c["cur"], "mult": c["mult"]})
    return out


# -- local solutions ----------------------------------------------------------
@dataclass
class LocalSolution:
    """Y(x) = Q(x) (x - alpha)^Atilde with Q a Laurent series."""

    alpha: complex
    Q: MatrixLaurentSeries
    Atilde: np.ndarray
    P: MatrixLaurentSeries
    shear: ShearResult

    def power(self, x) -> np.ndarray:
        return scipy.linalg.expm(self.Atilde * np.log(complex(x) - self.alpha))

    def evaluate(self, x) -> np.ndarray:
        return self.Q.evaluate(x) @ self.power(x)

    __call__ = evaluate

    def derivative(self, x) -> np.ndarray:
        E = self.power(x)
        u = complex(x) - self.alpha
        return self.Q.derivative().evaluate(x) @ E + self.Q.evaluate(x) @ self.Atilde @ E / u

    def to_json(self) -> dict:
        return normal_form_json(self)


def local_solution(F, t=None, N: int = DEFAULT_TRUNCATION) -> LocalSolution:
    """Factored local solution via shearing followed by the constant reduction."""
    F = F if isinstance(F, FuchsLocalSystem) else FuchsLocalSystem(F)
    S = F.at(t)
    if S.truncation > N:
        S = S.truncate(N)
    sh = shearing(FuchsLocalSystem(S))
    Sp = sh.system.series
    if Sp.truncation >= 1:
        P_list, A0 = reduce_to_constant(sh.system, None, Sp.truncation)
    else:
        P_list, A0 = [], Sp.coeff(0)
    P = gauge_series(P_list, Sp.center, S.n) if P_list else MatrixLaurentSeries.identity(S.n, Sp.center, truncation=Sp.truncation)
    Pinv = invert(P)
    Q = sh.Ginv @ Pinv
    return LocalSolution(complex(Sp.center), Q, np.asarray(A0), P, sh)


def normal_form_json(sol: LocalSolution) -> dict:
    return {
        "P": sol.P.to_json(),
        "C": [[complex_to_json(v) for v in row] for row in sol.shear.C],
        "Sexponents": sol.shear.S_exponents,
        "Atilde": [[complex_to_json(v) for v in row] for row in sol.Atilde],
        "shearIterations": sol.shear.iterations,
    }


# -- moderate growth ----------------------------------------------------------
@dataclass
class GrowthResult:
    passed: bool
    N: int | None
    slope: float | None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def _t_derivative(Y, x, t, orders, h):
    """Mixed central difference of Y in t of multi-order ``orders``."""
    orders = list(orders)
    k = next((i for i, m in enumerate(orders) if m > 0), None)
    if k is None:
        return np.asarray(Y(x, t), dtype=complex)
    orders[k] -= 1
    tp = list(t)
    tm = list(t)
    tp[k] += h
    tm[k] -= h
    return (_t_derivative(Y, x, tuple(tp), orders, h) - _t_derivative(Y, x, tuple(tm), orders, h)) / (2 * h)


def moderate_growth_check(Y, alpha, t, sector=(0.0, 1.5 * math.pi), m_orders=(0,), h_t: float = 1e-5,
                          samples: int = 12, rays: int = 7) -> GrowthResult:
    """Probe polynomial boundedness of d^m Y / dt^m as x -> alpha in a sector.

    ``Y(x, t)`` returns a matrix (or scalar); ``alpha`` is a number or a
    callable of t; ``sector`` is (bisector angle, opening < 2 pi).  Radii run
    geometrically from 0.1 with ratio 1/2.  Passes with the smallest
    nonnegative N such that |x - alpha|^N |d^m Y| -> 0 for the fitted
    power-law exponent (N = 0 when bounded).  A heuristic, not a proof.
    """
    bis, opening = sector
    if not 0 < opening < 2 * math.pi:
        raise ValueError("sector opening must lie in (0, 2 pi)")
    t = as_point(t)
    a = alpha(t) if callable(alpha) else complex(alpha)
    radii = 0.1 * 0.5 ** np.arange(samples)
    angles = bis + 0.5 * opening * np.linspace(-0.9, 0.9, rays)
    slopes = []
    with np.errstate(all="ignore"):
        for th in angles:
            norms = []
            for rho in radii:
                x = a + rho * np.exp(1j * th)
                try:
                    v = _t_derivative(Y, x, t, m_orders, h_t)
                except (OverflowError, ZeroDivisionError, FloatingPointError):
                    return GrowthResult(False, None, None, {"reason": "overflow", "angle": th, "radius": rho})
                except Exception as exc:  # evaluator failure on the sector
                    raise EvaluationFailure(f"evaluation failed at x={x}: {exc}") from exc
                nv = float(np.linalg.norm(np.atleast_1d(v)))
                if not math.isfinite(nv):
                    return GrowthResult(False, None, None, {"reason": "non-finite", "angle": th, "radius": rho})
                norms.append(max(nv, 1e-300))
            lg = np.log(norms)
            lr = np.log(radii)
            local = np.diff(lg) / np.diff(lr)
            tail = local[-4:]
            if np.max(tail) - np.min(tail) > 0.25:
                return GrowthResult(False, None, None, {"reason": "exponent not stabilizing", "angle": th,
                                                        "local_slopes": local.tolist()})
            if np.max(lg) - np.min(lg) < 1e-9 * max(1.0, abs(lg[0])):
                slopes.append(0.0)
            else:
                slopes.append(float(np.mean(tail)))
    s = min(slopes)
    N = 0 if s > -1e-3 else int(math.floor(-s + 1e-3)) + 1
    return GrowthResult(True, N, s, {"slopes": slopes})


__all__ = [
    "CLUSTER_TOL",
    "EPS_INT",
    "FuchsLocalSystem",
    "GrowthResult",
    "LocalSolution",
    "ShearResult",
    "block_diagonalize",
    "cluster_eigenvalues",
    "local_solution",
    "max_integer_gap",
    "moderate_growth_check",
    "reduce_to_constant",
    "shearing",
    "sylvester_step",
]
