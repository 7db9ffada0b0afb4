"""Dense complex linear algebra used throughout the package.

Conventions
-----------
* ``vec`` is column stacking: ``vec(X)[i + n*j] == X[i, j]``.
* ``kron(A, B)`` has the first factor as the slow index.
* Random streams come from numpy's counter-based Philox bit generator. A seed
  is a 64-bit unsigned integer; child streams are derived with
  ``numpy.random.SeedSequence(seed, spawn_key=path)`` (see :func:`child_rng`),
  so any implementation using Philox4x64 with the same key schedule
  reproduces the same samples.
"""

import os

import numpy as np

from mapcones.errors import DimensionError, NotHermitianError

if os.environ.get("MAPCONES_PURE_PYTHON"):
    from mapcones._jacobi_py import jacobi_eigh as _jacobi_eigh

    BACKEND = "python"
else:
    try:
        from mapcones._jacobi import jacobi_eigh as _jacobi_eigh

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from mapcones._jacobi_py import jacobi_eigh as _jacobi_eigh

        BACKEND = "python"

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9


def as_cmatrix(M):
    """Return ``M`` as a 2-d complex128 array."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got an array of shape {M.shape}")
    return M


def _require_square(M):
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {M.shape}")


def hermitian_defect(M):
    """Largest entry of ``|M - M*|``."""
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def is_hermitian(M, tol=HERMITIAN_TOL):
    M = as_cmatrix(M)
    if M.shape[0] != M.shape[1]:
        return False
    scale = 1.0 + (float(np.max(np.abs(M))) if M.size else 0.0)
    return hermitian_defect(M) <= tol * scale


def hermitian_eig(M, tol=1e-10):
    """Eigendecomposition of a hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    M : array_like
        Square hermitian matrix.
    tol : float
        Relative tolerance on ``max|M - M*|`` used to accept the input as
        hermitian. The anti-hermitian residue below this level is discarded.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    U : ndarray
        Unitary matrix of eigenvectors (columns), ``M = U diag(w) U*``.
    """
    M = as_cmatrix(M)
    _require_square(M)
    if not is_hermitian(M, tol):
        raise NotHermitianError(
            f"matrix is not hermitian: max|M - M*| = {hermitian_defect(M):.3e}"
        )
    w, U, _ = _jacobi_eigh(M)
    return w, U


def eigvalsh(M, tol=1e-10):
    return hermitian_eig(M, tol)[0]


def min_eigpair(M, tol=1e-10):
    w, U = hermitian_eig(M, tol)
    return float(w[0]), U[:, 0]


def expm(M):
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 1/2; a
    degree-18 Taylor polynomial then has truncation error below 1e-18 relative,
    which stays under 1e-12 after squaring for ``|M| <= 50``.
    """
    M = as_cmatrix(M)
    _require_square(M)
    n = M.shape[0]
    norm = float(np.max(np.sum(np.abs(M), axis=0))) if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    A = M / (2.0**s)
    result = np.eye(n, dtype=np.complex128)
    term = np.eye(n, dtype=np.complex128)
    for k in range(1, 19):
        term = term @ A / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def kron(A, B):
    """Kronecker product; ``A`` carries the slow index."""
    return np.kron(as_cmatrix(A), as_cmatrix(B))


def vec(X):
    """Column-stacking vectorisation."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, n=None):
    v = np.asarray(v)
    if n is None:
        n = square_root_dim(v.size)
    return v.reshape((n, v.size // n), order="F")


def square_root_dim(size):
    n = int(round(np.sqrt(size)))
    if n * n != size:
        raise DimensionError(f"dimension {size} is not a perfect square")
    return n


def partial_transpose(M, which="second"):
    """Partial transpose of an operator on C^n (x) C^n.

    ``which="second"`` transposes every n x n block in place; ``"first"``
    swaps block (j, k) with block (k, j) and leaves the blocks untouched.
    """
    M = as_cmatrix(M)
    _require_square(M)
    n = square_root_dim(M.shape[0])
    T = M.reshape(n, n, n, n)  # [j, a, k, b] : row (j,a), column (k,b)
    if which == "second":
        T = T.transpose(0, 3, 2, 1)
    elif which == "first":
        T = T.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"which must be 'first' or 'second', got {which!r}")
    return T.reshape(n * n, n * n).copy()


def psd_threshold(w, tol=PSD_TOL, relative=True):
    """Negative threshold used by PSD tests for eigenvalues ``w``."""
    if not relative:
        return tol
    scale = float(np.max(np.abs(w))) if len(w) else 0.0
    return tol * scale


def is_psd(M, tol=PSD_TOL, relative=True):
    """True iff the smallest eigenvalue of hermitian ``M`` is at least ``-tol``.

    With ``relative=True`` (the default) ``tol`` is scaled by the largest
    absolute eigenvalue.
    """
    w = eigvalsh(M)
    return bool(w[0] >= -psd_threshold(w, tol, relative))


# -- random sampling ---------------------------------------------------------

def make_rng(seed=None):
    """Philox-backed generator from an integer seed (or pass a Generator through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def child_rng(seed, *path):
    """Independent child stream identified by an integer ``path``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def complex_gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(n, rng, scale=1.0):
    G = complex_gaussian(rng, (n, n))
    return scale * 0.5 * (G + G.conj().T)


def sample_rank_k(n, k, count, rng):
    """``count`` random matrices ``X @ Y^H`` with ``X, Y`` of shape (n, k)."""
    if not 1 <= k <= n:
        raise ValueError(f"rank bound k must satisfy 1 <= k <= n, got k={k}, n={n}")
    X = complex_gaussian(rng, (count, n, k))
    Y = complex_gaussian(rng, (count, n, k))
    return X @ np.conj(np.swapaxes(Y, 1, 2))


def sample_rank_k_batch(n, k, count, rng, K=None):
    """Batch version of :func:`sample_rank_k_traceless`; returns shape (count, n, n)."""
    if not 1 <= k <= n:
        raise ValueError(f"rank bound k must satisfy 1 <= k <= n, got k={k}, n={n}")
    K = np.eye(n, dtype=np.complex128) if K is None else as_cmatrix(K)
    out = np.empty((count, n, n), dtype=np.complex128)
    filled = 0
    while filled < count:
        m = count - filled
        X = complex_gaussian(rng, (m, n, k))
        Y = complex_gaussian(rng, (m, n, k))
        # g[:, j] = y_j^H K x_j, the value of the functional on |x_j><y_j|
        g = np.einsum("mij,il,mlj->mj", np.conj(Y), K, X)
        if k == 1:
            # project y so that y^H K x = 0
            Kx = np.einsum("il,ml->mi", K, X[:, :, 0])
            nrm = np.sum(np.abs(Kx) ** 2, axis=1)
            safe = nrm > 1e-300
            coef = np.zeros(m, dtype=np.complex128)
            coef[safe] = np.einsum("mi,mi->m", np.conj(Kx[safe]), Y[safe, :, 0]) / nrm[safe]
            Y[:, :, 0] -= coef[:, None] * Kx
            lam = np.ones((m, 1), dtype=np.complex128)
            good = np.ones(m, dtype=bool)
        else:
            lam = complex_gaussian(rng, (m, k))
            last = g[:, -1]
            good = np.abs(last) > 1e-8 * (1.0 + np.max(np.abs(g), axis=1))
            lam[:, -1] = 0.0
            lam[good, -1] = -np.sum(lam[good, :-1] * g[good, :-1], axis=1) / last[good]
        V = np.einsum("mij,mj,mlj->mil", X, lam, np.conj(Y))
        nrm = np.linalg.norm(V, axis=(1, 2))
        good &= nrm > 1e-12
        V = V[good] / nrm[good, None, None]
        take = min(len(V), count - filled)
        out[filled : filled + take] = V[:take]
        filled += take
    return out


def sample_rank_k_traceless(n, k, constraint=None, seed=None):
    """Random nonzero V with rank(V) <= k and Tr(K V) = 0.

    ``V = sum_j lam_j |x_j><y_j|`` with Gaussian factors; the last weight is
    solved from the linear constraint (redrawn when that solve is singular).
    For ``k = 1`` the vector ``y`` is projected so that ``<y|K x> = 0``.
    ``constraint`` is the matrix K and defaults to the identity (traceless V).
    The result is normalised to unit Frobenius norm.
    """
    if k > n:
        raise ValueError(f"rank bound k={k} exceeds n={n}")
    return sample_rank_k_batch(n, k, 1, make_rng(seed), constraint)[0]
