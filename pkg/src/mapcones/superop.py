"""Linear maps M_n -> M_n and their four interconvertible representations.

A :class:`SuperOp` stores its Choi matrix canonically and materialises the
other forms on demand:

choi
    ``C = sum_jk E_jk (x) S(E_jk)``.
natural
    ``N`` with ``N @ vec(X) == vec(S(X))`` (column-stacking vec). For
    ``S = T_W`` with ``W = sum_i A_i (x) B_i`` this is ``sum_i B_i^T (x) A_i``.
tensor
    ``W = sum_i A_i (x) B_i`` with ``S(X) = sum_i A_i X B_i``.
kraus
    ``[L_1, ...]`` with ``S(X) = sum_i L_i^* X L_i``; only for CP maps.

The map ``X -> A X B^*`` has Choi matrix ``|vec A><vec B|``, which is the
identity that every cone test below relies on.
"""

from functools import cached_property

import numpy as np

from mapcones import numerics as nm
from mapcones.errors import DimensionError, NotCompletelyPositiveError

REPS = ("choi", "natural", "tensor", "kraus")
KRAUS_TOL = 1e-10


def _choi_to_natural(C, n):
    # C4[j, a, k, b] = S(E_jk)[a, b];  N4[b, a, k, j] = S(E_jk)[a, b]
    return np.einsum("jakb->bakj", C.reshape(n, n, n, n)).reshape(n * n, n * n)


def _natural_to_choi(N, n):
    return np.einsum("bakj->jakb", N.reshape(n, n, n, n)).reshape(n * n, n * n)


def _tensor_to_choi(W, n):
    # W4[a, k, j, b] = A_aj B_kb  ->  S(E_jk)[a, b] = sum A_aj B_kb
    return np.einsum("akjb->jakb", W.reshape(n, n, n, n)).reshape(n * n, n * n)


def _choi_to_tensor(C, n):
    return np.einsum("jakb->akjb", C.reshape(n, n, n, n)).reshape(n * n, n * n)


def _kraus_to_choi(kraus, n):
    C = np.zeros((n * n, n * n), dtype=np.complex128)
    for L in kraus:
        v = nm.vec(L.conj().T)
        C += np.outer(v, v.conj())
    return C


class SuperOp:
    """Immutable linear map on ``M_n``.

    ``rep`` records the representation the map was built from (and the one
    :attr:`data` returns); all others are derived from the Choi matrix.
    """

    def __init__(self, n, rep, data):
        if rep not in REPS:
            raise ValueError(f"unknown representation {rep!r}; expected one of {REPS}")
        n = int(n)
        if n < 1:
            raise DimensionError(f"dimension must be positive, got {n}")
        self.n = n
        self.rep = rep
        if rep == "kraus":
            ops = [nm.as_cmatrix(L) for L in data]
            for L in ops:
                if L.shape != (n, n):
                    raise DimensionError(f"Kraus operator of shape {L.shape}, expected {(n, n)}")
            for L in ops:
                L.setflags(write=False)
            self._data = tuple(ops)
            choi = _kraus_to_choi(ops, n)
        else:
            M = nm.as_cmatrix(data).copy()
            if M.shape != (n * n, n * n):
                raise DimensionError(
                    f"{rep} matrix of shape {M.shape} does not match n={n} (expected {(n * n, n * n)})"
                )
            M.setflags(write=False)
            self._data = M
            if rep == "choi":
                choi = M
            elif rep == "natural":
                choi = _natural_to_choi(M, n)
            else:
                choi = _tensor_to_choi(M, n)
        choi = np.ascontiguousarray(choi)
        choi.setflags(write=False)
        self._choi = choi

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_choi(cls, C):
        C = nm.as_cmatrix(C)
        return cls(nm.square_root_dim(C.shape[0]), "choi", C)

    @classmethod
    def from_natural(cls, N):
        N = nm.as_cmatrix(N)
        return cls(nm.square_root_dim(N.shape[0]), "natural", N)

    @classmethod
    def from_tensor(cls, W):
        W = nm.as_cmatrix(W)
        return cls(nm.square_root_dim(W.shape[0]), "tensor", W)

    @classmethod
    def from_kraus(cls, kraus):
        kraus = list(kraus)
        if not kraus:
            raise ValueError("need at least one Kraus operator (use SuperOp.zero for the zero map)")
        return cls(np.shape(kraus[0])[0], "kraus", kraus)

    @classmethod
    def from_function(cls, fn, n):
        """Tabulate an arbitrary linear function on the matrix units."""
        C = np.zeros((n * n, n * n), dtype=np.complex128)
        for j in range(n):
            for k in range(n):
                E = np.zeros((n, n), dtype=np.complex128)
                E[j, k] = 1.0
                C[j * n : (j + 1) * n, k * n : (k + 1) * n] = fn(E)
        return cls(n, "choi", C)

    @classmethod
    def zero(cls, n):
        return cls(n, "choi", np.zeros((n * n, n * n)))

    @classmethod
    def sandwich(cls, A, B):
        """``T_{A (x) B}``: ``X -> A X B``."""
        return cls.from_tensor(nm.kron(A, B))

    # -- representations --------------------------------------------------

    @property
    def data(self):
        return self._data

    @property
    def choi(self):
        return self._choi

    @cached_property
    def natural(self):
        N = _choi_to_natural(self._choi, self.n)
        N.setflags(write=False)
        return N

    @cached_property
    def tensor(self):
        W = _choi_to_tensor(self._choi, self.n)
        W.setflags(write=False)
        return W

    @cached_property
    def kraus(self):
        """Kraus operators from the eigendecomposition of the Choi matrix.

        Eigenvectors with eigenvalue above ``KRAUS_TOL`` (relative to the largest
        one) are kept. Raises :class:`NotCompletelyPositiveError` when the Choi
        matrix has an eigenvalue below ``-KRAUS_TOL``.
        """
        w, U = nm.hermitian_eig(self._choi)
        scale = max(1.0, float(np.max(np.abs(w)))) if len(w) else 1.0
        if w[0] < -KRAUS_TOL * scale:
            raise NotCompletelyPositiveError(
                f"map is not completely positive: Choi eigenvalue {w[0]:.6g}", eigenvalue=float(w[0])
            )
        ops = []
        for lam, u in zip(w, U.T):
            if lam > KRAUS_TOL * scale:
                ops.append((np.sqrt(lam) * nm.unvec(u, self.n)).conj().T)
        return tuple(ops)

    # -- action and algebra -----------------------------------------------

    def __call__(self, X):
        return apply(self, X)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return compose(self, other)

    def __repr__(self):
        return f"SuperOp(n={self.n}, rep={self.rep!r})"

    @property
    def is_hermitian_preserving(self):
        return nm.is_hermitian(self._choi, 1e-10)


def apply(S, X):
    X = nm.as_cmatrix(X)
    if X.shape != (S.n, S.n):
        raise DimensionError(f"input of shape {X.shape} for a map on M_{S.n}")
    if S.rep == "kraus":
        out = np.zeros_like(X)
        for L in S.data:
            out += L.conj().T @ X @ L
        return out
    return nm.unvec(S.natural @ nm.vec(X), S.n)


def convert(S, target):
    """Return ``S`` re-expressed in representation ``target``."""
    if target == "choi":
        return SuperOp(S.n, "choi", S.choi)
    if target == "natural":
        return SuperOp(S.n, "natural", S.natural)
    if target == "tensor":
        return SuperOp(S.n, "tensor", S.tensor)
    if target == "kraus":
        ops = S.kraus
        if not ops:
            return SuperOp.zero(S.n)
        return SuperOp(S.n, "kraus", ops)
    raise ValueError(f"unknown representation {target!r}")


def _check_same_n(S1, S2):
    if S1.n != S2.n:
        raise DimensionError(f"maps act on M_{S1.n} and M_{S2.n}")


def add(S1, S2):
    _check_same_n(S1, S2)
    return SuperOp(S1.n, "choi", S1.choi + S2.choi)


def scale(S, c):
    return SuperOp(S.n, "choi", c * S.choi)


def compose(S1, S2):
    """``S1 o S2``; natural matrices multiply."""
    _check_same_n(S1, S2)
    return SuperOp(S1.n, "natural", S1.natural @ S2.natural)


def power(S, m):
    N = np.linalg.matrix_power(S.natural, m)
    return SuperOp(S.n, "natural", N)


def involution_star(S):
    """Hilbert-Schmidt adjoint: ``<S*(A), B> = <A, S(B)>``."""
    return SuperOp(S.n, "natural", S.natural.conj().T)


def involution_sharp(S):
    """``S#(A) = S(A*)*``. Its Choi matrix is the conjugate transpose of ``C_S``."""
    return SuperOp(S.n, "choi", S.choi.conj().T)


def dagger_tensor(W):
    """Conjugate-linear involution with ``(A (x) B)^dag = B^* (x) A^*``."""
    W = nm.as_cmatrix(W)
    n = nm.square_root_dim(W.shape[0])
    W4 = W.reshape(n, n, n, n)  # [i, k, j, l] = A_ij B_kl
    return np.einsum("ljki->ikjl", W4.conj()).reshape(n * n, n * n)


def hs_inner(S1, S2):
    """``Tr(S1^* S2)`` on Lin(M_n, M_n); computed on Choi matrices."""
    _check_same_n(S1, S2)
    return complex(np.vdot(S1.choi, S2.choi))


def distance(S1, S2):
    """Frobenius distance of Choi matrices."""
    _check_same_n(S1, S2)
    return float(np.linalg.norm(S1.choi - S2.choi))


def rank_one_sandwich(V):
    """``T_{V (x) V^*}``: ``X -> V X V^*``; Choi matrix ``|vec V><vec V|``."""
    V = nm.as_cmatrix(V)
    v = nm.vec(V)
    return SuperOp(V.shape[0], "choi", np.outer(v, v.conj()))


# -- named maps ---------------------------------------------------------------

def depolarizing(n):
    """``P(X) = Tr(X) I / n``."""
    return SuperOp(n, "choi", np.eye(n * n) / n)


def diagonal_expectation(n):
    """``D(X)``: keep the diagonal of ``X``."""
    C = np.zeros((n * n, n * n))
    for j in range(n):
        C[j * n + j, j * n + j] = 1.0
    return SuperOp(n, "choi", C)


def transposition(n):
    C = np.zeros((n * n, n * n))
    for j in range(n):
        for k in range(n):
            C[j * n + k, k * n + j] = 1.0
    return SuperOp(n, "choi", C)


def identity(n):
    omega = nm.vec(np.eye(n))
    return SuperOp(n, "choi", np.outer(omega, omega))


_STANDARD = {"P": depolarizing, "D": diagonal_expectation, "T": transposition, "Id": identity}


def standard_map(name, n):
    try:
        return _STANDARD[name](n)
    except KeyError:
        raise ValueError(f"unknown standard map {name!r}; expected one of {sorted(_STANDARD)}") from None


def cyclic_shift(n):
    """Permutation matrix with ``C e_j = e_{j+1 mod n}``."""
    return np.roll(np.eye(n), 1, axis=0)


# -- orthonormal bases ----------------------------------------------------------

class OrthonormalBasis:
    """Hermitian orthonormal basis of ``M_n`` with ``B_1 = I / sqrt(n)``.

    The remaining elements are the normalised generalised Gell-Mann matrices
    (symmetric and antisymmetric pairs, then diagonal). For ``n = 2`` this is
    ``{I, sigma_x, sigma_y, sigma_z} / sqrt(2)``.
    """

    def __init__(self, n, elements=None):
        self.n = n
        if elements is None:
            elements = _gell_mann(n)
        self.elements = tuple(nm.as_cmatrix(B) for B in elements)
        if len(self.elements) != n * n:
            raise DimensionError(f"basis of M_{n} needs {n * n} elements, got {len(self.elements)}")
        # columns are vec(B_i); unitary for an orthonormal basis
        self.matrix = np.stack([nm.vec(B) for B in self.elements], axis=1)

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def gram(self):
        return self.matrix.conj().T @ self.matrix

    def coefficients(self, V):
        """``v_i = <B_i, V>``."""
        return self.matrix.conj().T @ nm.vec(nm.as_cmatrix(V))

    def combine(self, v):
        return nm.unvec(self.matrix @ np.asarray(v), self.n)


def _gell_mann(n):
    out = [np.eye(n, dtype=np.complex128) / np.sqrt(n)]
    for j in range(n):
        for k in range(j + 1, n):
            S = np.zeros((n, n), dtype=np.complex128)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            A = np.zeros((n, n), dtype=np.complex128)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            out += [S, A]
    for m in range(1, n):
        d = np.zeros(n)
        d[:m] = 1.0
        d[m] = -m
        out.append(np.diag(d / np.linalg.norm(d)).astype(np.complex128))
    return out


def pauli_basis(halved=False):
    """Pauli basis of ``M_2``: normalised (default) or each matrix divided by 2."""
    s = 0.5 if halved else 1 / np.sqrt(2)
    mats = [
        np.eye(2),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]]),
    ]
    return [s * np.asarray(M, dtype=np.complex128) for M in mats]
