"""Analytic continuation of fundamental solutions and monodromy matrices.

Transport along a path solves dZ/ds = A(z(s)) z'(s) Z with an embedded
Dormand-Prince 5(4) pair in complex arithmetic.  With Z0(a0) = I the
monodromy of a loop is its transport matrix, and the convention that
``g * h`` traverses ``h`` first makes loop -> matrix a homomorphism.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import MonodromyError, PathTooCloseToPole, StepSizeUnderflow
from .param_algebra import as_point, complex_to_json
from .systems import NumericSystem, RationalMatrix

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

MIN_TOL, MAX_TOL = 1e-13, 1e-3
STEP_CLEARANCE_FRACTION = 0.25
H_MIN = 1e-14


# -- paths --------------------------------------------------------------------
@dataclass(frozen=True)
class Line:
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, s):
        return self.start + s * (self.end - self.start)

    def velocity(self, s):
        return self.end - self.start

    def distance_to(self, p) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(p - self.start)
        s = ((p - self.start) * d.conjugate()).real / abs(d) ** 2
        s = min(1.0, max(0.0, s))
        return abs(p - self.point(s))


@dataclass(frozen=True)
class Arc:
    """Circle arc from angle theta0 to theta1 (counterclockwise when theta1 > theta0)."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    @property
    def length(self) -> float:
        return abs(self.theta1 - self.theta0) * self.radius

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.theta0 + s * (self.theta1 - self.theta0)))

    def velocity(self, s):
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return 1j * self.radius * (self.theta1 - self.theta0) * np.exp(1j * th)

    def distance_to(self, p) -> float:
        rel = p - self.center
        ang = math.atan2(rel.imag, rel.real)
        lo, hi = sorted((self.theta0, self.theta1))
        # angle of p inside the swept range?
        k = math.ceil((lo - ang) / (2 * math.pi))
        if ang + 2 * math.pi * k <= hi:
            return abs(abs(rel) - self.radius)
        return min(abs(p - self.point(0.0)), abs(p - self.point(1.0)))


class Path:
    """Piecewise path of Line and Arc segments."""

    def __init__(self, segments):
        self.segments = list(segments)

    @classmethod
    def polyline(cls, points):
        pts = [complex(p) for p in points]
        return cls(Line(a, b) for a, b in zip(pts[:-1], pts[1:]))

    @classmethod
    def circle(cls, center, radius, start_angle=0.0, turns=1):
        return cls([Arc(complex(center), float(radius), start_angle, start_angle + 2 * math.pi * turns)])

    @property
    def start(self):
        return self.segments[0].point(0.0)

    @property
    def end(self):
        return self.segments[-1].point(1.0)

    @property
    def length(self):
        return sum(s.length for s in self.segments)

    def clearance(self, poles) -> float:
        poles = np.atleast_1d(np.asarray(poles, dtype=complex))
        if not poles.size:
            return math.inf
        return min(seg.distance_to(p) for seg in self.segments for p in poles)

    def winding_number(self, p, samples: int = 400) -> int:
        total = 0.0
        for seg in self.segments:
            z = np.array([seg.point(s) for s in np.linspace(0, 1, samples)]) - p
            total += float(np.sum(np.angle(z[1:] / z[:-1])))
        return int(round(total / (2 * math.pi)))

    def __add__(self, other):
        return Path(self.segments + other.segments)

    def reversed(self):
        segs = []
        for s in reversed(self.segments):
            if isinstance(s, Line):
                segs.append(Line(s.end, s.start))
            else:
                segs.append(Arc(s.center, s.radius, s.theta1, s.theta0))
        return Path(segs)


# -- integrator ---------------------------------------------------------------
@dataclass
class Transport:
    """Z(end) = T Z(start); ``error`` sums the accepted local error estimates."""

    T: np.ndarray
    error: float
    steps: int
    mesh: list = field(default_factory=list, repr=False)


def _as_numeric(sys, t):
    if isinstance(sys, NumericSystem):
        return sys
    if isinstance(sys, RationalMatrix):
        return sys.numeric(t)
    if callable(sys):
        return _CallableSystem(sys)
    raise TypeError("expected a LinearSystem, NumericSystem or callable A(x)")


class _CallableSystem:
    def __init__(self, f):
        self.f = f
        self.alphas = np.zeros(0, dtype=complex)

    def __call__(self, x):
        return np.asarray(self.f(x), dtype=complex)

    def pole_distance(self, x):
        return math.inf


def _segment(A, seg, Z, tol, mesh_in, h0=0.05):
    """Integrate one segment over s in [0, 1]."""
    L = seg.length
    if L == 0:
        return Z, 0.0, [], 0
    s = 0.0
    steps = []
    err_total = 0.0
    h = h0 if mesh_in is None else None
    K = [None] * 7

    def f(sv, Zv):
        x = seg.point(sv)
        return (A(x) * seg.velocity(sv)) @ Zv

    if mesh_in is not None:
        for h in mesh_in:
            Z, err = _dp_step(f, s, Z, h, K)
            err_total += err
            s += h
        return Z, err_total, list(mesh_in), len(mesh_in)
    fz = f(0.0, Z)
    count = 0
    while s < 1.0:
        d = A.pole_distance(seg.point(s))
        hmax = STEP_CLEARANCE_FRACTION * d / L if math.isfinite(d) else 1.0
        h = min(h, hmax, 1.0 - s)
        if h < H_MIN:
            raise StepSizeUnderflow(f"step size underflow at s={s:.6g} on {seg}")
        Znew, err = _dp_step(f, s, Z, h, K, fz)
        scale = max(1.0, float(np.max(np.abs(Z))))
        en = err / scale
        if en <= tol or h <= 4 * H_MIN:
            s += h
            Z = Znew
            fz = K[6]
            steps.append(h)
            err_total += err
            count += 1
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * (tol / en) ** 0.2))
            h *= fac
        else:
            h *= max(0.1, 0.9 * (tol / en) ** 0.25)
    return Z, err_total, steps, count


def _dp_step(f, s, Z, h, K, fz=None):
    K[0] = f(s, Z) if fz is None else fz
    for i in range(1, 7):
        acc = Z.copy()
        for j, a in enumerate(_A[i]):
            if a:
                acc += (h * a) * K[j]
        K[i] = f(s + _C[i] * h, acc)
    # the 7th stage is the 5th-order solution (first same as last)
    Z5 = Z + h * (_B5[0] * K[0] + _B5[2] * K[2] + _B5[3] * K[3] + _B5[4] * K[4] + _B5[5] * K[5])
    E = h * (_E[0] * K[0] + _E[2] * K[2] + _E[3] * K[3] + _E[4] * K[4] + _E[5] * K[5] + _E[6] * K[6])
    return Z5, float(np.max(np.abs(E)))


def integrate_along(sys, path: Path, t=None, tol: float = 1e-10, Z0=None, min_clearance: float = 1e-8,
                    mesh=None) -> Transport:
    """Transport matrix T of dY/dx = A(x, t) Y along ``path``.

    ``mesh`` replays the step sizes of an earlier run (one list per segment),
    which keeps finite-difference derivatives of T smooth.
    """
    if not MIN_TOL <= tol <= MAX_TOL:
        raise ValueError(f"tol must lie in [{MIN_TOL}, {MAX_TOL}]")
    A = _as_numeric(sys, t)
    if A.alphas.size:
        c = path.clearance(A.alphas)
        if c < min_clearance:
            raise PathTooCloseToPole(f"path passes within {c:.3g} of a pole")
    n = A(path.start).shape[0]
    Z = np.eye(n, dtype=complex) if Z0 is None else np.array(Z0, dtype=complex)
    err = 0.0
    nsteps = 0
    out_mesh = []
    for k, seg in enumerate(path.segments):
        Z, e, steps, cnt = _segment(A, seg, Z, tol, None if mesh is None else mesh[k])
        err += e
        nsteps += cnt
        out_mesh.append(steps)
    if Z0 is not None:
        Z = Z @ np.linalg.inv(np.asarray(Z0, dtype=complex))
    return Transport(Z, err, nsteps, out_mesh)


# -- loop plans ---------------------------------------------------------------
class PathPlan:
    """Base point plus one positively oriented loop per pole.

    Either explicit waypoint polylines (fixed for every t) or the default
    geometry: a straight approach to a circle of radius
    ``radius_factor * (distance to the nearest other pole)`` around the pole,
    one counterclockwise turn, and the same segment back.
    """

    def __init__(self, base_point, pole_indices, waypoints=None, radius_factor: float = 0.5,
                 clearance: float | None = None):
        self.base_point = complex(base_point)
        self.pole_indices = list(pole_indices)
        self.waypoints = None if waypoints is None else [[complex(p) for p in w] for w in waypoints]
        self.radius_factor = radius_factor
        self.clearance = clearance
        # loops are composed so that "g * h" traverses h first
        self.convention = "right-to-left"
        if self.waypoints is not None and len(self.waypoints) != len(self.pole_indices):
            raise ValueError("need one waypoint list per loop")

    @classmethod
    def default(cls, sys, grid, base_point=None):
        """Base point below all poles; loops ordered so that the product of
        the loop matrices equals the monodromy of a big counterclockwise loop."""
        grid = [as_point(t, sys.r) for t in grid]
        al = np.array([sys.alphas_at(t) for t in grid])
        if base_point is None:
            c = complex(np.mean(al)) if al.size else 0.0
            span = float(np.max(np.abs(al - c))) if al.size else 0.0
            base_point = c - 1j * (span + max(1.0, span))
        base_point = complex(base_point)
        a0 = al[0] if al.size else np.zeros(0)
        # argument measured from straight up (the cut points away from the poles)
        ang = np.angle((a0 - base_point) * -1j)
        order = sorted(range(len(a0)), key=lambda i: -ang[i])
        return cls(base_point, order)

    def loop(self, sys, k: int, t) -> Path:
        i = self.pole_indices[k]
        if self.waypoints is not None:
            return Path.polyline(self.waypoints[k])
        al = sys.alphas_at(t) if isinstance(sys, RationalMatrix) else np.asarray(sys.alphas)
        a = al[i]
        others = np.delete(al, i)
        d_other = float(np.min(np.abs(others - a))) if others.size else math.inf
        rho = self.radius_factor * min(d_other, abs(self.base_point - a))
        direction = (self.base_point - a) / abs(self.base_point - a)
        entry = a + rho * direction
        th = math.atan2(direction.imag, direction.real)
        return Path([Line(self.base_point, entry), Arc(a, rho, th, th + 2 * math.pi), Line(entry, self.base_point)])

    def loops(self, sys, t) -> list[Path]:
        return [self.loop(sys, k, t) for k in range(len(self.pole_indices))]

    def validate(self, sys, t) -> float:
        """Clearance at t; raises if a loop misses its pole or gets too close."""
        al = sys.alphas_at(t)
        worst = math.inf
        for k, path in enumerate(self.loops(sys, t)):
            c = path.clearance(al)
            worst = min(worst, c)
            i = self.pole_indices[k]
            for j, a in enumerate(al):
                w = path.winding_number(a)
                if w != (1 if j == i else 0):
                    raise PathTooCloseToPole(f"loop {k} winds {w} times around pole {j} at t={t}")
        need = self.clearance
        if need is None:
            need = 1e-6
        if worst < need:
            raise PathTooCloseToPole(f"clearance {worst:.3g} below {need:.3g} at t={t}")
        return worst

    def big_loop(self, sys, t) -> Path:
        """Counterclockwise circle through the base point around every pole."""
        al = sys.alphas_at(t)
        c = complex(np.mean(al)) if al.size else self.base_point + 1j
        R = abs(self.base_point - c)
        if al.size and float(np.max(np.abs(al - c))) >= R:
            raise PathTooCloseToPole("base point is not outside every pole")
        th = math.atan2((self.base_point - c).imag, (self.base_point - c).real)
        return Path([Arc(c, R, th, th + 2 * math.pi)])

    def to_json(self):
        out = {"basePoint": complex_to_json(self.base_point), "poleOrder": self.pole_indices,
               "radiusFactor": self.radius_factor, "convention": self.convention}
        if self.waypoints is not None:
            out["waypoints"] = [[complex_to_json(p) for p in w] for w in self.waypoints]
        return out


@dataclass
class MonodromyData:
    plan: PathPlan
    grid: list
    matrices: list  # per grid point: list of loop matrices (None on failure)
    tol: float
    errors: list
    failures: dict = field(default_factory=dict)
    meshes: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "plan": self.plan.to_json(),
            "grid": [[complex_to_json(c) for c in t] for t in self.grid],
            "matrices": [
                None if ms is None else [[[complex_to_json(v) for v in row] for row in M] for M in ms]
                for ms in self.matrices
            ],
            "tol": self.tol,
            "errors": self.errors,
            "failures": {str(k): v for k, v in self.failures.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid_index", "t", "loop", "row", "col", "re", "im"])
        for g, (t, ms) in enumerate(zip(self.grid, self.matrices)):
            if ms is None:
                continue
            tt = ";".join(f"{c.real:.17g}{c.imag:+.17g}j" for c in t)
            for k, M in enumerate(ms):
                for (i, j), v in np.ndenumerate(M):
                    w.writerow([g, tt, k, i, j, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


def _monodromy_at(sys, plan, t, tol, meshes=None):
    plan.validate(sys, t)
    A = sys.numeric(t)
    mats, errs, used = [], [], []
    for k, path in enumerate(plan.loops(sys, t)):
        tr = integrate_along(A, path, tol=tol, mesh=None if meshes is None else meshes[k])
        mats.append(tr.T)
        errs.append(tr.error)
        used.append(tr.mesh)
    return mats, errs, used


def monodromy_rep(sys, plan=None, grid=((0.0,),), tol: float = 1e-10, executor=None, meshes=None) -> MonodromyData:
    """Monodromy matrices of every loop of ``plan`` at each grid point.

    Failures at a grid point are recorded in ``failures`` and leave ``None``.
    ``executor`` (a concurrent.futures executor) spreads grid points over
    workers; results come back in grid order.
    """
    grid = [as_point(t, sys.r) for t in grid]
    if plan is None:
        plan = PathPlan.default(sys, grid)

    def work(g):
        try:
            return _monodromy_at(sys, plan, grid[g], tol, None if meshes is None else meshes[g])
        except (MonodromyError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
            return exc

    results = list(executor.map(work, range(len(grid)))) if executor is not None else [work(g) for g in range(len(grid))]
    md = MonodromyData(plan, grid, [], tol, [])
    for g, res in enumerate(results):
        if isinstance(res, Exception):
            md.matrices.append(None)
            md.errors.append(None)
            md.meshes.append(None)
            md.failures[g] = f"{type(res).__name__}: {res}"
        else:
            mats, errs, used = res
            for M in mats:
                if abs(np.linalg.det(M)) <= 1e-8:
                    md.failures[g] = "monodromy matrix numerically singular"
            md.matrices.append(mats)
            md.errors.append(errs)
            md.meshes.append(used)
    return md


def ordered_product(mats) -> np.ndarray:
    out = np.eye(mats[0].shape[0], dtype=complex)
    for M in mats:
        out = out @ M
    return out


def check_product_relation(md: MonodromyData, sys) -> float:
    """max over the grid of ||M_1 ... M_s - M_big|| (Frobenius).

    M_big is the identity when infinity is a regular point, otherwise the
    transport along a big counterclockwise loop through the base point.
    """
    worst = 0.0
    for t, mats in zip(md.grid, md.matrices):
        if mats is None:
            continue
        if not mats:
            continue
        prod = ordered_product(mats)
        if sys.infinity_is_regular(t):
            ref = np.eye(prod.shape[0])
        else:
            ref = integrate_along(sys, md.plan.big_loop(sys, t), t, tol=md.tol).T
        worst = max(worst, float(np.linalg.norm(prod - ref)))
    return worst


def local_monodromy_from_exponent(Atilde, t=None) -> np.ndarray:
    """exp(2 pi i Atilde(t))."""
    if hasattr(Atilde, "eval"):
        Atilde = Atilde.eval(t)
    return scipy.linalg.expm(2j * np.pi * np.asarray(Atilde, dtype=complex))


def local_loop_monodromy(sys, pole_index: int, t, local_sol, radius: float, tol: float = 1e-11) -> np.ndarray:
    """Loop matrix around one pole in the frame of a local solution.

    Transports once around a circle of the given radius and conjugates by the
    local solution at the start point: Y(x1)^-1 T Y(x1).
    """
    t = as_point(t, sys.r)
    a = sys.alphas_at(t)[pole_index]
    th = -math.pi / 2 + 0.3
    x1 = a + radius * np.exp(1j * th)
    T = integrate_along(sys, Path.circle(a, radius, th), t, tol=tol).T
    Y1 = local_sol.evaluate(x1)
    return np.linalg.solve(Y1, T @ Y1)


__all__ = [
    "Arc",
    "Line",
    "MonodromyData",
    "Path",
    "PathPlan",
    "Transport",
    "check_product_relation",
    "integrate_along",
    "local_loop_monodromy",
    "local_monodromy_from_exponent",
    "monodromy_rep",
    "ordered_product",
]
