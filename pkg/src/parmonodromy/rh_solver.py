"""Inverse monodromy: Fuchsian residues realizing given loop matrices.

Starting from the logarithmic local model ``B_i = log(M_i) / (2 pi i)`` the
residues of ``A(x) = sum_i B_i / (x - a_i)`` are refined by Levenberg-Marquardt
on the misfit between the continued monodromy and the targets.  ``B_s`` is
tied to ``-(B_1 + ... + B_{s-1})`` so that infinity stays a regular point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .continuation import PathPlan, integrate_along, ordered_product
from .errors import BranchAmbiguity, InvalidTarget, MaxIterationsExceeded, SingularMatrix
from .normal_form import block_diagonalize, cluster_eigenvalues
from .param_algebra import ParamRational, Poly, as_point, complex_to_json, parse_complex
from .systems import LinearSystem, NumericSystem

CUT_TOL = 1e-8
PRODUCT_TOL = 1e-8
FD_STEP = 1e-6


# -- matrix logarithm with branch control ------------------------------------
def _spectral_projectors(N):
    """Projectors onto the generalized eigenspaces of N, grouped by cluster."""
    C, blocks = block_diagonalize(N)
    Cinv = np.linalg.inv(C)
    lam = np.diag(C @ N @ Cinv)
    out = []
    for b in blocks:
        E = np.zeros(N.shape, dtype=complex)
        idx = list(b)
        E[idx, idx] = 1.0
        out.append((complex(np.mean(lam[idx])), Cinv @ E @ C))
    return out


def _check_invertible(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SingularMatrix("expected a square matrix")
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 1e-13 * max(s[0], 1e-300):
        raise SingularMatrix("matrix is numerically singular")
    return M


def matrix_log_tracked(M, seed=None) -> np.ndarray:
    """N with exp(2 pi i N) = M.

    Without ``seed`` the principal branch (eigenvalue arguments in (-pi, pi])
    is used; an eigenvalue within 1e-8 of the negative real axis (but not on
    it to rounding) is ambiguous.  With ``seed`` each eigenvalue cluster of
    N is shifted by the integer that brings it closest to the seed spectrum.
    """
    M = _check_invertible(M)
    mu = np.linalg.eigvals(M)
    on_cut = []
    for v in mu:
        near = v.real < 0 and abs(v.imag) <= CUT_TOL * abs(v)
        if near:
            exact = abs(v.imag) <= 1e-14 * abs(v)
            if not exact and seed is None:
                raise BranchAmbiguity("eigenvalue within 1e-8 of the branch cut", location=complex(v))
            on_cut.append(v)
    with np.errstate(all="ignore"):
        L = scipy.linalg.logm(M)
    N = np.asarray(L, dtype=complex) / (2j * np.pi)
    if seed is None:
        # eigenvalues on the cut take argument +pi, i.e. Re(N-eigenvalue) = +1/2
        if on_cut:
            for lam, Pj in _spectral_projectors(N):
                if abs(lam.real + 0.5) < 1e-6:
                    N = N + Pj
    else:
        seed = np.asarray(seed, dtype=complex)
        sigma = np.linalg.eigvals(seed)
        for lam, Pj in _spectral_projectors(N):
            k = min((round((s - lam).real) for s in sigma), key=lambda kk: min(abs(lam + kk - s) for s in sigma))
            if k:
                N = N + k * Pj
    check = scipy.linalg.expm(2j * np.pi * N)
    if np.linalg.norm(check - M) > 1e-9 * max(1.0, np.linalg.norm(M)):
        raise BranchAmbiguity("logarithm failed the exp round trip")
    return N


def log_lipschitz_bound(M, N) -> float:
    """Local Lipschitz constant of M -> log(M) / (2 pi i) near M.

    For the Frechet derivative of log the norm is bounded by the largest
    divided difference of log over the spectrum of M, here estimated from the
    eigenvalue magnitudes and the Jordan structure via the condition number
    of the eigenvector matrix.
    """
    mu, V = np.linalg.eig(np.asarray(M, dtype=complex))
    kappa = np.linalg.cond(V)
    if not math.isfinite(kappa) or kappa > 1e12:
        kappa = 1e12
    return kappa / (2 * np.pi * float(np.min(np.abs(mu))))


# -- targets and solutions ----------------------------------------------------
class RHTarget:
    """Loop matrices around constant points a_1..a_s on a parameter grid."""

    def __init__(self, poles, grid, targets, base_point=None, check: bool = True):
        self.poles = [complex(a) for a in poles]
        self.grid = [as_point(t) for t in grid]
        self.targets = [[np.asarray(M, dtype=complex) for M in ms] for ms in targets]
        s = len(self.poles)
        if s < 1:
            raise InvalidTarget("need at least one singular point")
        if len(set(self.poles)) != s:
            raise InvalidTarget("singular points must be distinct")
        if len(self.targets) != len(self.grid) or not self.grid:
            raise InvalidTarget("need one list of target matrices per grid point")
        if base_point is None:
            c = complex(np.mean(self.poles))
            span = max(abs(a - c) for a in self.poles)
            base_point = c - 1j * (span + max(1.0, span))
        self.base_point = complex(base_point)
        if check:
            self.validate()

    @property
    def n(self):
        return self.targets[0][0].shape[0]

    @property
    def s(self):
        return len(self.poles)

    def validate(self):
        for g, ms in enumerate(self.targets):
            if len(ms) != self.s:
                raise InvalidTarget(f"grid point {g}: expected {self.s} matrices, got {len(ms)}")
            for M in ms:
                try:
                    _check_invertible(M)
                except SingularMatrix as exc:
                    raise InvalidTarget(f"grid point {g}: target not invertible") from exc
            dev = np.linalg.norm(ordered_product(ms) - np.eye(self.n))
            if dev > PRODUCT_TOL:
                raise InvalidTarget(f"grid point {g}: product of targets deviates from I by {dev:.3g}")

    def plan(self) -> PathPlan:
        return PathPlan(self.base_point, list(range(self.s)))

    @classmethod
    def from_monodromy(cls, md, sys):
        """Targets from forward monodromy data of a system with constant poles."""
        al = [sys.alphas_at(t) for t in md.grid]
        poles = [complex(al[0][i]) for i in md.plan.pole_indices]
        for a in al[1:]:
            if np.max(np.abs(np.asarray([a[i] for i in md.plan.pole_indices]) - poles)) > 1e-12:
                raise InvalidTarget("singular points must not depend on t")
        return cls(poles, md.grid, md.matrices, md.plan.base_point)

    def to_json(self):
        return {
            "poles": [complex_to_json(a) for a in self.poles],
            "basePoint": complex_to_json(self.base_point),
            "grid": [[complex_to_json(c) for c in t] for t in self.grid],
            "targets": [[_mat_json(M) for M in ms] for ms in self.targets],
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            [parse_complex(a) for a in data["poles"]],
            [tuple(parse_complex(c) for c in t) for t in data["grid"]],
            [[_mat_parse(M) for M in ms] for ms in data["targets"]],
            parse_complex(data["basePoint"]) if data.get("basePoint") is not None else None,
        )


def _mat_json(M):
    return [[complex_to_json(v) for v in row] for row in np.asarray(M)]


def _mat_parse(M):
    return np.array([[parse_complex(v) for v in row] for row in M], dtype=complex)


@dataclass
class RHSolution:
    poles: list
    base_point: complex
    grid: list
    residues: list  # per grid point: list of s matrices (None if unsolved)
    fit_residual: list
    iterations: list
    status: list
    logs: list = field(default_factory=list)
    integration_tol: float = 1e-11

    def system(self, g: int) -> NumericSystem:
        return fuchsian_numeric(self.poles, self.residues[g])

    def to_json(self):
        return {
            "poles": [complex_to_json(a) for a in self.poles],
            "basePoint": complex_to_json(self.base_point),
            "grid": [[complex_to_json(c) for c in t] for t in self.grid],
            "residues": [None if rs is None else [_mat_json(B) for B in rs] for rs in self.residues],
            "fitResidual": self.fit_residual,
            "iterations": self.iterations,
            "status": self.status,
            "log": self.logs,
        }


def fuchsian_numeric(poles, residues) -> NumericSystem:
    n = residues[0].shape[0]
    return NumericSystem(np.asarray(poles, dtype=complex), [np.asarray(B)[None] for B in residues], [], n)


def realized_monodromy(poles, residues, plan: PathPlan, tol: float, meshes=None):
    """Loop matrices of sum_i B_i / (x - a_i), plus the meshes used."""
    A = fuchsian_numeric(poles, residues)
    mats, used = [], []
    for k in range(len(poles)):
        tr = integrate_along(A, plan.loop(A, k, None), tol=tol, mesh=None if meshes is None else meshes[k])
        mats.append(tr.T)
        used.append(tr.mesh)
    return mats, used


def rh_initialize(target: RHTarget):
    """Seeded logarithms N_i(t) per grid point; grid order carries the seeds."""
    out = []
    prev = None
    for g, ms in enumerate(target.targets):
        Ns = []
        for i, M in enumerate(ms):
            try:
                Ns.append(matrix_log_tracked(M, None if prev is None else prev[i]))
            except BranchAmbiguity as exc:
                raise BranchAmbiguity(str(exc), location={"grid": g, "loop": i}) from exc
        out.append(Ns)
        prev = Ns
    return out


def _unpack(x, n, s):
    Bs = [x[k * n * n : (k + 1) * n * n].reshape(n, n) for k in range(s - 1)]
    Bs.append(-sum(Bs) if Bs else np.zeros((n, n), dtype=complex))
    return Bs


def _residual(x, target_ms, poles, plan, tol, n, meshes=None):
    mats, used = realized_monodromy(poles, _unpack(x, n, len(poles)), plan, tol, meshes)
    r = np.concatenate([(M - T).ravel() for M, T in zip(mats, target_ms)])
    return r, used


def rh_solve(target: RHTarget, max_iter: int = 50, tol_fit: float = 1e-8, damping: float = 1e-3,
             integration_tol: float = 1e-11, executor=None, raise_on_failure: bool = True) -> RHSolution:
    """Levenberg-Marquardt fit of Fuchsian residues to the target loop matrices.

    The misfit sum_i ||M_i(B) - M_i^target||_F^2 is holomorphic in the free
    residues B_1..B_{s-1}, so the forward-difference Jacobian is taken with
    complex steps and the normal equations are solved in complex arithmetic.
    Step sizes of the integrator are frozen at the current iterate while the
    Jacobian columns are formed.
    """
    n, s = target.n, target.s
    plan = target.plan()
    inits = rh_initialize(target)
    sol = RHSolution(target.poles, target.base_point, target.grid, [], [], [], [], [], integration_tol)
    prev_x = None
    worst_fail = None
    for g, ms in enumerate(target.targets):
        x_log = np.concatenate([N.ravel() for N in inits[g][: s - 1]]) if s > 1 else np.zeros(0, complex)
        starts = [x_log] if prev_x is None else [x_log, prev_x]
        best = None
        for x0 in starts:
            r0, mesh0 = _residual(x0, ms, target.poles, plan, integration_tol, n)
            if best is None or np.linalg.norm(r0) < np.linalg.norm(best[1]):
                best = (x0, r0, mesh0)
        x, r, mesh = best
        log = [{"iter": 0, "residual": float(np.linalg.norm(r)), "start": "log" if x is x_log else "warm"}]
        status = "converged"
        it = 0
        if np.linalg.norm(r) > tol_fit and s > 1:
            x, r, it, status, lm_log = _levenberg_marquardt(
                x, r, mesh, ms, target.poles, plan, integration_tol, n, max_iter, tol_fit, damping, executor
            )
            log.extend(lm_log)
        res = float(np.linalg.norm(r))
        if res > tol_fit and status == "converged":
            status = "max_iterations"
        sol.residues.append(_unpack(x, n, s))
        sol.fit_residual.append(res)
        sol.iterations.append(it)
        sol.status.append(status)
        sol.logs.append(log)
        if status == "converged":
            prev_x = x
        else:
            worst_fail = res if worst_fail is None else max(worst_fail, res)
    if worst_fail is not None and raise_on_failure:
        raise MaxIterationsExceeded(
            f"{sum(st != 'converged' for st in sol.status)} grid point(s) did not reach tol_fit={tol_fit}",
            solution=sol,
            best_residual=worst_fail,
        )
    return sol


def _levenberg_marquardt(x, r, mesh, ms, poles, plan, tol, n, max_iter, tol_fit, damping, executor):
    log = []
    p = x.size

    def jac(xc, rc, meshc):
        def col(k):
            h = FD_STEP * max(1.0, abs(xc[k]))
            xp = xc.copy()
            xp[k] += h
            rp, _ = _residual(xp, ms, poles, plan, tol, n, meshc)
            return (rp - rc) / h

        cols = list(executor.map(col, range(p))) if executor is not None else [col(k) for k in range(p)]
        return np.stack(cols, axis=1)

    J = jac(x, r, mesh)
    g = J.conj().T @ r
    H = J.conj().T @ J
    mu = damping * float(np.max(np.real(np.diag(H))))
    nu = 2.0
    F = 0.5 * float(np.vdot(r, r).real)
    status = "max_iterations"
    it = 0
    stalls = 0
    while it < max_iter:
        it += 1
        try:
            delta = np.linalg.solve(H + mu * np.eye(p), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        x_new = x + delta
        r_new, mesh_new = _residual(x_new, ms, poles, plan, tol, n)
        F_new = 0.5 * float(np.vdot(r_new, r_new).real)
        pred = 0.5 * float((mu * np.vdot(delta, delta) - np.vdot(delta, g)).real)
        rho = (F - F_new) / pred if pred > 0 else -1.0
        entry = {"iter": it, "residual": float(np.sqrt(2 * F_new)), "mu": mu, "gain": rho,
                 "jacobian_cond": float(np.linalg.cond(J))}
        if rho > 0:
            x, r, mesh, F = x_new, r_new, mesh_new, F_new
            mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
            entry["accepted"] = True
            log.append(entry)
            if np.sqrt(2 * F) <= tol_fit:
                status = "converged"
                break
            if np.linalg.norm(delta) <= 1e-14 * (np.linalg.norm(x) + 1e-14):
                status = "non_fuchsian_likely"
                break
            J = jac(x, r, mesh)
            g = J.conj().T @ r
            H = J.conj().T @ J
            stalls = 0
        else:
            mu *= nu
            nu *= 2
            entry["accepted"] = False
            log.append(entry)
            stalls += 1
            if stalls >= 12:
                status = "non_fuchsian_likely"
                break
    return x, r, it, status, log


def rh_roundtrip_verify(sol: RHSolution, target: RHTarget, tol: float = 1e-6, integration_tol: float | None = None) -> dict:
    """Recompute the monodromy of the solved systems with a tighter integrator."""
    itol = integration_tol if integration_tol is not None else max(1e-13, min(1e-12, sol.integration_tol / 10))
    plan = target.plan()
    devs = []
    for g, ms in enumerate(target.targets):
        if sol.residues[g] is None:
            devs.append(None)
            continue
        mats, _ = realized_monodromy(target.poles, sol.residues[g], plan, itol)
        devs.append(float(max(np.linalg.norm(M - T) for M, T in zip(mats, ms))))
    finite = [d for d in devs if d is not None]
    worst = max(finite) if finite else 0.0
    return {
        "deviation": devs,
        "maxDeviation": worst,
        "tol": tol,
        "integrationTol": itol,
        "passed": bool(finite) and len(finite) == len(devs) and worst <= tol,
    }


# -- fixtures -------------------------------------------------------------------
def random_fuchsian(seed: int, n: int = 2, poles=(0.0, 1.0, 2.0), scale: float = 0.3) -> LinearSystem:
    """Seeded Fuchsian system with residues B_i(t) = C_i + t D_i summing to zero.

    Everything is scaled so that ||C_i|| + ||D_i|| <= scale, which bounds the
    spectral radius of every residue by ``scale`` for |t| <= 1.
    """
    rng = np.random.default_rng(seed)
    s = len(poles)

    def draw():
        return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))

    Cs = [draw() for _ in range(s - 1)]
    Ds = [0.25 * draw() for _ in range(s - 1)]
    Cs.append(-sum(Cs))
    Ds.append(-sum(Ds))
    worst = max(np.linalg.norm(C, 2) + np.linalg.norm(D, 2) for C, D in zip(Cs, Ds))
    f = scale / worst
    pole_data = []
    for a, C, D in zip(poles, Cs, Ds):
        pm = [[_affine(f * C[i, j], f * D[i, j]) for j in range(n)] for i in range(n)]
        pole_data.append((complex(a), [pm]))
    return LinearSystem(n, pole_data)


def _affine(c, d):
    return ParamRational(Poly({(0,): complex(c), (1,): complex(d)}, 1))


__all__ = [
    "RHSolution",
    "RHTarget",
    "fuchsian_numeric",
    "log_lipschitz_bound",
    "matrix_log_tracked",
    "realized_monodromy",
    "random_fuchsian",
    "rh_initialize",
    "rh_roundtrip_verify",
    "rh_solve",
]
