"""Independent reference computations shared by the tests.

Nothing here calls the package's series arithmetic; products of truncated
power series are plain coefficient convolutions.
"""
import numpy as np


def conv(P, A, N):
    """Coefficients 0..N of (sum P_k x^k)(sum A_k x^k) for lists of matrices."""
    n = P[0].shape[0]
    out = []
    for k in range(N + 1):
        acc = np.zeros((n, n), dtype=complex)
        for j in range(k + 1):
            if j < len(P) and k - j < len(A):
                acc = acc + P[j] @ A[k - j]
        out.append(acc)
    return out


def recurrence_defect(P, A, N):
    """max_k ||k P_k - (A_0 P_k - (P A)_k)|| relative to the coefficient scale.

    ``P`` starts with the identity; zero means delta P = A_0 P - P A holds
    coefficientwise through order N.
    """
    PA = conv(P, A, N)
    scale = max(1.0, max(np.abs(M).max() for M in P[: N + 1]), max(np.abs(M).max() for M in A[: N + 1]))
    worst = 0.0
    for k in range(N + 1):
        lhs = k * P[k]
        rhs = A[0] @ P[k] - PA[k]
        worst = max(worst, float(np.abs(lhs - rhs).max()) / scale)
    return worst


def nonresonant_A0(rng, n, min_gap=0.05):
    """Random A_0 whose eigenvalue differences stay min_gap away from nonzero integers."""
    while True:
        lam = rng.uniform(-0.45, 0.45, n) + 1j * rng.uniform(-0.3, 0.3, n)
        d = lam[:, None] - lam[None, :]
        far = np.abs(d - np.round(d.real)) > min_gap
        np.fill_diagonal(far, True)
        if far.all():
            V = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            return V @ np.diag(lam) @ np.linalg.inv(V)


def planted_gap_A0(rng, n):
    """A_0 = V diag(lam) V^-1 with some eigenvalues shifted by 1, 2 or 3."""
    base = rng.uniform(-0.4, 0.4) + 1j * rng.uniform(-0.2, 0.2)
    lam = np.array([base + rng.integers(0, 4) for _ in range(n)], dtype=complex)
    if np.ptp(lam.real) < 0.5:
        lam[-1] += rng.integers(1, 4)
    V = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    V = V / np.linalg.norm(V, axis=0)
    return V @ np.diag(lam) @ np.linalg.inv(V), lam
