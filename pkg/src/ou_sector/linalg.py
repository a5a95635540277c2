"""Dense linear-algebra kernels: matrix exponential, Lyapunov solves,
exponential-sandwich integrals and SPD square roots.

Matrices are plain ``numpy`` arrays. The ``require_*`` validators return
read-only float copies, so a validated matrix can be shared freely.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import linalg
from scipy.integrate import quad_vec

from .errors import AccuracyError, DefinitenessError, DimensionError, DomainError, StabilityError

log = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-12
SYMMETRY_RTOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def require_square(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite, square float array."""
    arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries.")
    return arr


def require_spd(S, name: str = "matrix") -> np.ndarray:
    """Validate symmetry (1e-12 relative) and positive definiteness."""
    arr = require_square(S, name)
    scale = max(np.abs(arr).max(), np.finfo(float).tiny)
    if np.abs(arr - arr.T).max() > SYMMETRY_RTOL * scale:
        raise DefinitenessError(f"{name} is not symmetric.")
    arr = 0.5 * (arr + arr.T)
    lam_min = linalg.eigvalsh(arr)[0]
    if lam_min <= 0.0:
        raise DefinitenessError(f"{name} is not positive definite (smallest eigenvalue {lam_min:.6g}).")
    return _freeze(arr)


def require_stable(A, name: str = "drift matrix") -> np.ndarray:
    """Validate that every eigenvalue has real part below -1e-12."""
    arr = require_square(A, name)
    eigs = linalg.eigvals(arr)
    worst = eigs[np.argmax(eigs.real)]
    if worst.real >= -STABILITY_MARGIN:
        raise StabilityError(worst)
    return _freeze(arr)


def _same_dim(A: np.ndarray, Q: np.ndarray) -> None:
    if A.shape != Q.shape:
        raise DimensionError(f"Dimension mismatch: A is {A.shape}, Q is {Q.shape}.")


def matrix_exp(M, t: float = 1.0) -> np.ndarray:
    """Return e^{tM} (Pade scaling and squaring)."""
    arr = require_square(M)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t}.")
    return linalg.expm(t * arr)


def lyapunov_residual(A: np.ndarray, X: np.ndarray, Q: np.ndarray) -> float:
    """Spectral norm of A X + X A^T + Q."""
    return float(np.linalg.norm(A @ X + X @ A.T + Q, 2))


def solve_lyapunov(A, Q, tol: float = 1e-10) -> np.ndarray:
    """Solve A X + X A^T + Q = 0 for the stationary covariance X = Q_inf.

    Bartels-Stewart (Schur form) via ``scipy.linalg.solve_continuous_lyapunov``.
    """
    A = require_stable(A)
    Q = require_spd(Q, "Q")
    _same_dim(A, Q)
    X = linalg.solve_continuous_lyapunov(A, -Q)
    X = 0.5 * (X + X.T)
    res = lyapunov_residual(A, X, Q)
    if res > tol * np.linalg.norm(Q, 2):
        raise AccuracyError(f"Lyapunov residual {res:.3e} exceeds {tol:g}*|Q|.")
    log.debug("Lyapunov solve n=%d residual=%.3e", A.shape[0], res)
    return require_spd(X, "Q_inf")


def lyapunov_kron(A, Q) -> np.ndarray:
    """Kronecker-product oracle for small n: (I (x) A + A (x) I) vec X = -vec Q."""
    A = require_stable(A)
    Q = require_spd(Q, "Q")
    _same_dim(A, Q)
    n = A.shape[0]
    eye = np.eye(n)
    K = np.kron(eye, A) + np.kron(A, eye)
    x = np.linalg.solve(K, -Q.reshape(-1, order="F"))
    X = x.reshape((n, n), order="F")
    return 0.5 * (X + X.T)


def _sandwich_block(A: np.ndarray, Q: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    # exp(h [[A, Q], [0, -A^T]]) = [[F11, F12], [0, F22]] with Q_h = F12 F11^T
    n = A.shape[0]
    F = np.zeros((2 * n, 2 * n))
    F[:n, :n] = A
    F[:n, n:] = Q
    F[n:, n:] = -A.T
    E = linalg.expm(h * F)
    F11 = E[:n, :n]
    Qh = E[:n, n:] @ F11.T
    return F11, 0.5 * (Qh + Qh.T)


def integrate_sandwich(A, Q, t: float) -> np.ndarray:
    """Return Q_t = int_0^t e^{sA} Q e^{sA^T} ds.

    The block exponential is taken over a short step h = t / 2^k with
    h |A| <= 1, then doubled k times through
    Q_{2h} = Q_h + e^{hA} Q_h e^{hA^T}, which only adds semidefinite terms.
    """
    A = require_stable(A)
    Q = require_spd(Q, "Q")
    _same_dim(A, Q)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"t must be a positive finite number, got {t}.")
    scale = t * np.linalg.norm(A, 1)
    k = max(0, math.ceil(math.log2(scale))) if scale > 1.0 else 0
    h = t / 2**k
    E, Qt = _sandwich_block(A, Q, h)
    for _ in range(k):
        Qt = Qt + E @ Qt @ E.T
        Qt = 0.5 * (Qt + Qt.T)
        E = E @ E
    return Qt


def sandwich_quadrature(A, Q, t: float, epsrel: float = 1e-12, epsabs: float = 1e-14) -> np.ndarray:
    """Adaptive Gauss-Kronrod oracle for Q_t (tests and cross-checks only)."""
    A = require_stable(A)
    Q = require_spd(Q, "Q")
    _same_dim(A, Q)
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}.")

    def integrand(s: float) -> np.ndarray:
        E = linalg.expm(s * A)
        return E @ Q @ E.T

    value, _err = quad_vec(integrand, 0.0, t, epsabs=epsabs, epsrel=epsrel, norm="max", limit=2000)
    return 0.5 * (value + value.T)


def spd_sqrt(S) -> np.ndarray:
    """Symmetric positive definite square root via the spectral decomposition."""
    S = require_spd(S)
    w, V = linalg.eigh(S)
    R = (V * np.sqrt(w)) @ V.T
    return _freeze(0.5 * (R + R.T))


def spd_inv_sqrt(S) -> np.ndarray:
    S = require_spd(S)
    w, V = linalg.eigh(S)
    R = (V / np.sqrt(w)) @ V.T
    return _freeze(0.5 * (R + R.T))


def spectral_gap(A) -> float:
    """Distance of the spectrum of a stable matrix from the imaginary axis."""
    return float(-np.max(linalg.eigvals(require_stable(A)).real))
