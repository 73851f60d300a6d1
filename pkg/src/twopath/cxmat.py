"""Small complex linear-algebra kernel for the 2x2 and 4x4 matrices used here.

Everything operates on plain ``numpy`` complex arrays.  The Hermitian
eigensolver is a cyclic complex Jacobi iteration; at these sizes it is robust,
deterministic, and accurate to a few ulp, which the rest of the package relies
on (matrix square roots, positivity projection, concurrence).
"""

from __future__ import annotations

import math

import numpy as np

# Jacobi termination: off-diagonal Frobenius norm relative to the matrix
# norm, and a sweep cap.  The threshold must be relative: an absolute cut
# stalls on matrices whose whole norm sits near it (e.g. the concurrence
# kernel of a nearly separable state), returning them undiagonalized.
OFFDIAG_TOL = 1e-14
MAX_SWEEPS = 100

HERMITIAN_TOL = 1e-10
EIG_CLIP_TOL = 1e-10


def hermitian_defect(m: np.ndarray) -> float:
    """Frobenius norm of M - M^dagger."""
    return float(np.linalg.norm(m - m.conj().T))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_defect(m) <= tol


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; (A x B)[2i+k, 2j+l] = A[i,j] * B[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m: np.ndarray, which: str) -> np.ndarray:
    """Trace a 4x4 joint matrix down to 2x2 over one degree of freedom.

    The joint index order is (spatial, polarization) flattened as 2*s + p,
    i.e. basis {u_a x, u_a y, u_b x, u_b y}.  ``which`` names the degree of
    freedom that is traced out: tracing out ``"spatial"`` leaves the 2x2
    polarization matrix, tracing out ``"polarization"`` leaves the 2x2
    spatial matrix.  The trace is preserved.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"partial_trace expects a 4x4 matrix, got {m.shape}")
    r = m.reshape(2, 2, 2, 2)  # [s, p, s', p']
    if which == "spatial":
        return np.einsum("spsq->pq", r)
    if which == "polarization":
        return np.einsum("spqp->sq", r)
    raise ValueError(f"unknown degree of freedom {which!r}; "
                     "expected 'spatial' or 'polarization'")


def _offdiag_norm(a: list[list[complex]], n: int) -> float:
    s = 0.0
    for i in range(n):
        row = a[i]
        for j in range(n):
            if i != j:
                x = row[j]
                s += x.real * x.real + x.imag * x.imag
    return math.sqrt(s)


def _jacobi(m: np.ndarray, want_vectors: bool):
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Returns (diag values unsorted, accumulated unitary as nested lists or
    None).  Each rotation zeroes one off-diagonal pivot with a phase
    rotation followed by a real Givens rotation.
    """
    n = m.shape[0]
    a = [[complex(m[i, j]) for j in range(n)] for i in range(n)]
    v = None
    if want_vectors:
        v = [[1.0 + 0.0j if i == j else 0.0j for j in range(n)] for i in range(n)]

    tol = OFFDIAG_TOL * float(np.linalg.norm(m))
    prev_off = math.inf
    for _ in range(MAX_SWEEPS):
        off = _offdiag_norm(a, n)
        if off <= tol or off >= prev_off:
            break
        prev_off = off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r  # e^{i phi}
                theta = 0.5 * math.atan2(2.0 * r, a[p][p].real - a[q][q].real)
                c = math.cos(theta)
                s = math.sin(theta)
                # U restricted to the (p, q) plane:
                #   U[p,p] = c, U[p,q] = -s, U[q,p] = s*conj(phase),
                #   U[q,q] = c*conj(phase)
                spc = s * phase.conjugate()
                cpc = c * phase.conjugate()
                # columns (A <- A U)
                for i in range(n):
                    aip = a[i][p]
                    aiq = a[i][q]
                    a[i][p] = c * aip + spc * aiq
                    a[i][q] = -s * aip + cpc * aiq
                # rows (A <- U^dagger A)
                sp = s * phase
                cp = c * phase
                ap = a[p]
                aq = a[q]
                for j in range(n):
                    apj = ap[j]
                    aqj = aq[j]
                    ap[j] = c * apj + sp * aqj
                    aq[j] = -s * apj + cp * aqj
                ap[q] = 0.0j
                aq[p] = 0.0j
                if v is not None:
                    for i in range(n):
                        vip = v[i][p]
                        viq = v[i][q]
                        v[i][p] = c * vip + spc * viq
                        v[i][q] = -s * vip + cpc * viq
    values = [a[i][i].real for i in range(n)]
    return values, v


def _check_hermitian(m: np.ndarray, tol: float):
    defect = hermitian_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian: defect norm {defect:.3e} "
                         f"exceeds tolerance {tol:.1e}")


def eig_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (values, vectors) with eigenvalues sorted descending and the
    matching orthonormal eigenvectors as columns of ``vectors``.
    """
    m = np.asarray(m, dtype=complex)
    _check_hermitian(m, tol)
    values, v = _jacobi(m, want_vectors=True)
    order = sorted(range(len(values)), key=lambda i: -values[i])
    vals = np.array([values[i] for i in order])
    vecs = np.array([[v[i][j] for j in order] for i in range(len(values))],
                    dtype=complex)
    return vals, vecs


def eigvals_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Eigenvalues only (descending); skips eigenvector accumulation."""
    m = np.asarray(m, dtype=complex)
    _check_hermitian(m, tol)
    values, _ = _jacobi(m, want_vectors=False)
    return np.array(sorted(values, reverse=True))


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in [-EIG_CLIP_TOL, 0) are treated as numerical zeros; more
    negative ones mean the input is not a valid (coherence) operator.
    Positive eigenvalues below a few ulp of the largest are rounding
    residue of rank-deficient inputs and are zeroed as well, so the root
    of a rank-1 matrix stays exactly rank-1 instead of acquiring
    sqrt(epsilon)-sized spurious directions.
    """
    vals, vecs = eig_hermitian(m)
    if vals[-1] < -EIG_CLIP_TOL:
        raise ValueError("matrix is not positive semidefinite: smallest "
                         f"eigenvalue {vals[-1]:.3e} is below -{EIG_CLIP_TOL:.1e}")
    snap = 64.0 * np.finfo(float).eps * max(vals[0], 0.0)
    roots = np.sqrt(np.where(vals > snap, vals, 0.0))
    return (vecs * roots) @ vecs.conj().T
