"""Dense real/complex matrix primitives.

Matrices are plain numpy arrays. Functions that produce symmetric results
symmetrize explicitly so that downstream symmetry checks are exact.
"""

import numpy as np
import scipy.linalg

from .exceptions import SingularMatrixError, ValidationError

PIVOT_TOL = 1e-14


def symmetrize(a):
    """Return ``(a + a^T) / 2`` (complex-symmetric, not Hermitian)."""
    a = np.asarray(a)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def as_symmetric(a, name="matrix", atol=1e-12):
    """Validate that ``a`` is square and symmetric, returning a float/complex copy."""
    a = np.asarray(a)
    a = np.array(a, dtype=np.result_type(a.dtype, float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > atol * scale:
        raise ValidationError(f"{name} must be symmetric")
    return symmetrize(a)


def is_positive_definite(a):
    a = np.asarray(a)
    try:
        np.linalg.cholesky(symmetrize(a))
    except np.linalg.LinAlgError:
        return False
    return True


def expm(a):
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise ValidationError("expm: non-finite input")
    return scipy.linalg.expm(a)


def kron_sum(m):
    """``I (x) m + m (x) I``: the operator X -> mX + Xm^T acting on vec(X)."""
    n = m.shape[0]
    eye = np.eye(n)
    return np.kron(eye, m) + np.kron(m, eye)


def vec(a):
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, n):
    return np.asarray(v).reshape(n, n, order="F")


def check_stable(m):
    eig = np.linalg.eigvals(m)
    if np.any(eig.real >= 0):
        raise ValidationError(
            "drift m must have eigenvalues with strictly negative real part, "
            f"got {eig}")


def varsigma(t, m, sigma):
    """Integrated conditional covariance of the Wishart process.

    Computes ``int_0^t e^{(t-s)m} sigma^2 e^{(t-s)m^T} ds`` from the closed form
    ``vec = A^{-1}(e^{tA} - I) vec(sigma^2)`` with ``A = I (x) m + m (x) I``.
    """
    if t < 0:
        raise ValidationError("varsigma: t must be >= 0")
    m = np.asarray(m, dtype=float)
    check_stable(m)
    n = m.shape[0]
    s2 = np.asarray(sigma, dtype=float) @ np.asarray(sigma, dtype=float)
    if t == 0:
        return np.zeros((n, n))
    big = kron_sum(m)
    rhs = (expm(t * big) - np.eye(n * n)) @ vec(s2)
    out = unvec(solve(big, rhs), n)
    return symmetrize(out)


def lyapunov_solve(m, rhs):
    """Solve ``m X + X m^T = -rhs`` for X through the Kronecker system."""
    m = np.asarray(m, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    check_stable(m)
    n = m.shape[0]
    x = unvec(solve(kron_sum(m), -vec(rhs)), n)
    return symmetrize(x) if np.allclose(rhs, rhs.T) else x


def _check_pivots(a):
    a = np.asarray(a)
    norm = np.max(np.abs(a), axis=(-1, -2), keepdims=True)
    if a.ndim == 2:
        _, u = scipy.linalg.lu(a, permute_l=True)
        piv = np.abs(np.diag(u))
        if np.any(piv <= PIVOT_TOL * norm.ravel()[0]):
            raise SingularMatrixError("matrix is numerically singular")


def solve(a, b):
    """Solve ``a x = b`` by LU with partial pivoting (batched over leading axes)."""
    a = np.asarray(a)
    if a.ndim == 2:
        _check_pivots(a)
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


def inv(a):
    a = np.asarray(a)
    if a.ndim == 2:
        _check_pivots(a)
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


def det(a):
    return np.linalg.det(a)


def cond(a):
    """2-norm condition number, batched; ``inf`` for exactly singular input."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.linalg.cond(a)


def logdet(a):
    """Sum of principal logarithms of the eigenvalues of ``a`` (batched).

    For ``I - 2 z theta varsigma`` with real ``theta`` every eigenvalue is of the
    form ``1 - 2 z lambda`` and keeps a positive real part inside the MGF
    domain, so this branch is continuous along damped contours.
    """
    return np.sum(np.log(np.linalg.eigvals(a).astype(complex)), axis=-1)
