"""Semigroup generators: GKSL form, coefficient matrices, conditional positivity.

Conventions
-----------
* A GKSL generator acts as
  ``Psi(X) = i[H, X] + sum_j (V_j X V_j^* - 1/2 {V_j V_j^*, X})``,
  which annihilates the identity.
* For an orthonormal basis ``{B_i}`` of ``M_n`` (``B_1 = I/sqrt(n)``) the
  coefficient matrix ``D`` is defined by ``S(X) = sum_ij D_ij B_i X B_j^*``.
  Since ``X -> A X B^*`` has Choi matrix ``|vec A><vec B|``, ``C_S = U D U^*``
  with ``U`` the unitary whose columns are ``vec(B_i)``.
* The block ``D[1:, 1:]`` is the form ``V -> <T_{V (x) V^*}, S>`` restricted to
  traceless ``V``; CP semigroups are exactly those with this block PSD.
"""

from dataclasses import dataclass, field

import numpy as np

from mapcones import numerics as nm
from mapcones.cones import NO_WITNESS, NOT_MEMBER, ConeVerdict, search_negative_form
from mapcones.errors import (
    DimensionError,
    NotHermitianError,
    NotIdempotentError,
    PreconditionError,
    UnsupportedIdempotentError,
)
from mapcones.superop import OrthonormalBasis, SuperOp, compose, distance, identity, pauli_basis

IDEMPOTENT_TOL = 1e-10


@dataclass(frozen=True)
class GKSLData:
    H: np.ndarray
    V: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = nm.as_cmatrix(self.H)
        if not nm.is_hermitian(H):
            raise NotHermitianError(f"H is not hermitian: max|H - H*| = {nm.hermitian_defect(H):.3e}")
        V = tuple(nm.as_cmatrix(v) for v in self.V)
        for v in V:
            if v.shape != H.shape:
                raise DimensionError(f"jump operator of shape {v.shape}, H has shape {H.shape}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "V", V)

    @property
    def n(self):
        return self.H.shape[0]


@dataclass(frozen=True)
class DMatrix:
    """Coefficients of a map in an orthonormal basis.

    ``kappa`` is ``D_11 / n``: the multiple of ``X`` contributed by the
    ``B_1 X B_1^*`` term, i.e. the constant in ``Psi(X) = kappa X + W X + X W^* + ...``.
    """

    basis: OrthonormalBasis
    D: np.ndarray

    @property
    def kappa(self):
        return float(np.real(self.D[0, 0])) / self.basis.n

    @property
    def W(self):
        """``(1/sqrt(n)) sum_{i>=2} D_i1 B_i``."""
        n = self.basis.n
        col = np.array(self.D[:, 0])
        col[0] = 0.0
        return self.basis.combine(col) / np.sqrt(n)

    @property
    def dissipative_block(self):
        return self.D[1:, 1:]


@dataclass(frozen=True)
class IdempotentPair:
    """``T0`` idempotent and ``S`` absorbed by it on both sides."""

    T0: SuperOp
    S: SuperOp

    def __post_init__(self):
        if self.T0.n != self.S.n:
            raise DimensionError(f"T0 acts on M_{self.T0.n} but S on M_{self.S.n}")
        d = idempotent_defect(self.T0)
        if d > IDEMPOTENT_TOL * max(1.0, _opnorm(self.T0)):
            raise NotIdempotentError(f"T0 is not idempotent: |T0 T0 - T0| = {d:.3e}", defect=d)
        scale = max(1.0, _opnorm(self.S))
        for label, other in (("S T0", compose(self.S, self.T0)), ("T0 S", compose(self.T0, self.S))):
            d = distance(other, self.S)
            if d > IDEMPOTENT_TOL * scale:
                raise NotIdempotentError(f"{label} differs from S by {d:.3e}", defect=d)


def _opnorm(S):
    return float(np.linalg.norm(S.natural))


def idempotent_defect(T0):
    return distance(compose(T0, T0), T0)


# -- construction ---------------------------------------------------------------

def _sandwich_choi(A, B):
    """Choi matrix of ``X -> A X B``."""
    return np.outer(nm.vec(A), nm.vec(B.T))


def build_gksl(g):
    """Generator ``Psi`` of the GKSL data ``g``."""
    n = g.n
    I = np.eye(n, dtype=np.complex128)
    C = _sandwich_choi(1j * g.H, I) + _sandwich_choi(I, -1j * g.H)
    for V in g.V:
        VV = V @ V.conj().T
        C += _sandwich_choi(V, V.conj().T)
        C += _sandwich_choi(-0.5 * VV, I) + _sandwich_choi(I, -0.5 * VV)
    return SuperOp.from_choi(C)


def random_gksl(n, rng, jumps=None, scale=1.0):
    """Random GKSL data with Gaussian ``H`` and ``jumps`` jump operators."""
    rng = nm.make_rng(rng)
    if jumps is None:
        jumps = int(rng.integers(1, n * n))
    H = nm.random_hermitian(n, rng, scale)
    V = tuple(scale * nm.complex_gaussian(rng, (n, n)) / np.sqrt(2 * n) for _ in range(jumps))
    return GKSLData(H, V)


def to_dmatrix(S, basis=None):
    basis = OrthonormalBasis(S.n) if basis is None else basis
    if basis.n != S.n:
        raise DimensionError(f"basis of M_{basis.n} for a map on M_{S.n}")
    U = basis.matrix
    return DMatrix(basis, U.conj().T @ S.choi @ U)


def from_dmatrix(dm):
    U = dm.basis.matrix
    return SuperOp.from_choi(U @ nm.as_cmatrix(dm.D) @ U.conj().T)


def _dissipative_scale(S):
    return max(float(np.linalg.norm(S.choi)), 1e-300)


def is_cp_generator(S, tol=nm.PSD_TOL):
    """Exact test: ``exp(tS)`` is CP for every ``t >= 0``.

    True iff ``D`` is hermitian and ``D[1:, 1:]`` is PSD; the tolerance is
    relative to the Frobenius norm of the generator.
    """
    dm = to_dmatrix(S)
    if not nm.is_hermitian(dm.D, 1e-10):
        return False
    block = dm.dissipative_block
    w = nm.eigvalsh(0.5 * (block + block.conj().T))
    return bool(w[0] >= -tol * _dissipative_scale(S))


def evolve(S, t):
    """``exp(t S)`` through the natural matrix."""
    return SuperOp.from_natural(nm.expm(t * S.natural))


def k_positive_generator_witnessed(S, k, samples=None, seed=42, tol=nm.PSD_TOL, restarts=None, starts=()):
    """Search traceless ``V`` of rank at most ``k`` with ``<T_{V (x) V^*}, S> < 0``.

    ``NotMember`` means ``exp(tS)`` leaves ``P_k`` for small ``t > 0``. For
    ``k = n`` the search is exact and agrees with :func:`is_cp_generator`.
    """
    from mapcones.cones import RESTARTS, _hermitian_choi, default_samples

    n = S.n
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    C = _hermitian_choi(S)
    samples = default_samples(n) if samples is None else samples
    restarts = RESTARTS if restarts is None else restarts
    thresh = -tol * _dissipative_scale(S)
    q, V = search_negative_form(
        C, k, thresh, samples, nm.make_rng(seed), restarts=restarts, K=np.eye(n), starts=starts
    )
    if V is not None and q < thresh:
        return ConeVerdict("P_k", NOT_MEMBER, q, k=k, witness=V, witness_kind="matrix", note="generator")
    return ConeVerdict("P_k", NO_WITNESS, float(q), k=k, note="generator")


def gksl_decompose(S, tol=1e-10):
    """Recover GKSL data from an identity-annihilating CP generator.

    The PSD block ``D[1:, 1:] = sum_r mu_r u_r u_r^*`` yields jump operators
    ``V_r = sqrt(mu_r) sum_i u_r[i] B_{i+1}``; the remaining first-column part
    ``W`` gives ``H = (W - W^*) / (2i)``. Only the rebuilt action is unique.
    """
    n = S.n
    I = np.eye(n)
    unit_defect = float(np.max(np.abs(S(I))))
    scale = max(1.0, _dissipative_scale(S))
    if unit_defect > tol * scale:
        raise PreconditionError(f"generator does not annihilate the identity: max|S(I)| = {unit_defect:.3e}")
    dm = to_dmatrix(S)
    if not nm.is_hermitian(dm.D, tol):
        raise NotHermitianError(f"D is not hermitian: max|D - D*| = {nm.hermitian_defect(dm.D):.3e}")
    mu, U = nm.hermitian_eig(dm.dissipative_block)
    if mu[0] < -nm.PSD_TOL * scale:
        raise PreconditionError(f"dissipative block is not PSD: eigenvalue {mu[0]:.6g}")
    B = np.stack(dm.basis.elements[1:])
    V = []
    for m, u in zip(mu, U.T):
        if m > tol * scale:
            V.append(np.sqrt(m) * np.einsum("i,iab->ab", u, B))
    W = dm.W
    H = (W - W.conj().T) / 2j
    return GKSLData(0.5 * (H + H.conj().T), tuple(V))


def action_residual(S1, S2):
    """Largest entrywise difference of the Choi matrices."""
    return float(np.max(np.abs(S1.choi - S2.choi)))


# -- M_2 Pauli criterion ------------------------------------------------------------

def pauli_coefficients(S, halved=False):
    """4 x 4 coefficient matrix of a map on ``M_2`` in the Pauli basis."""
    if S.n != 2:
        raise DimensionError(f"Pauli coefficients need n = 2, got n = {S.n}")
    return to_dmatrix(S, OrthonormalBasis(2, pauli_basis())).D * (2.0 if halved else 1.0)


def _isotropic_value(R, w, c):
    # v = a + i b with a, b orthonormal, c = a x b:
    # v* (R + iA) v = tr R - c.R.c + 2 w.c, where A x = w x x
    return np.trace(R) - c @ R @ c + 2.0 * w @ c


def isotropic_vector(c):
    """``v = a + i b`` with ``a, b`` orthonormal and ``a x b = c`` (``c`` unit)."""
    c = np.asarray(c, dtype=float)
    c = c / np.linalg.norm(c)
    trial = np.eye(3)[int(np.argmin(np.abs(c)))]
    a = trial - (trial @ c) * c
    a /= np.linalg.norm(a)
    b = np.cross(c, a)
    return a + 1j * b


def isotropic_minimum(D3, samples=2000, seed=42, refine=True):
    """Minimum of ``<v|D3 v>`` over ``v = a + ib``, ``a, b`` orthonormal in R^3.

    These ``v`` are, up to scale, exactly the nonzero solutions of
    ``v_1^2 + v_2^2 + v_3^2 = 0``. Returns ``(value, v)``.
    """
    from scipy.optimize import minimize

    D3 = nm.as_cmatrix(D3)
    if D3.shape != (3, 3):
        raise DimensionError(f"expected a 3 x 3 block, got {D3.shape}")
    if not nm.is_hermitian(D3, 1e-10):
        raise NotHermitianError("coefficient block is not hermitian")
    R = np.real(0.5 * (D3 + D3.conj().T))
    A = np.imag(0.5 * (D3 + D3.conj().T))
    w = np.array([A[2, 1], A[0, 2], A[1, 0]])
    rng = nm.make_rng(seed)
    cs = rng.standard_normal((max(samples, 1), 3))
    cs /= np.linalg.norm(cs, axis=1)[:, None]
    # stationary directions are natural candidates too
    cs = np.vstack([cs, np.linalg.eigh(R)[1].T, -np.linalg.eigh(R)[1].T])
    vals = np.trace(R) - np.einsum("mi,ij,mj->m", cs, R, cs) + 2.0 * cs @ w
    c = cs[int(np.argmin(vals))]
    best = float(np.min(vals))
    if refine:
        res = minimize(lambda x: _isotropic_value(R, w, x / np.linalg.norm(x)), c, method="BFGS")
        cand = res.x / np.linalg.norm(res.x)
        val = _isotropic_value(R, w, cand)
        if val < best:
            best, c = float(val), cand
    v = isotropic_vector(c)
    return float(np.real(np.vdot(v, D3 @ v))), v


def positive_generator_m2(S, samples=2000, seed=42, tol=nm.PSD_TOL):
    """Positivity of ``exp(tS)`` on ``M_2`` from the Pauli coefficient block.

    ``NotMember`` carries an isotropic ``v`` with ``<v|D' v> < -tol``, where
    ``D'`` is the lower 3 x 3 block in the normalised Pauli basis.
    """
    D = pauli_coefficients(S)
    if not nm.is_hermitian(D, 1e-10):
        raise NotHermitianError("Pauli coefficient matrix is not hermitian")
    return isotropic_verdict(D[1:, 1:], samples, seed, tol, scale=_dissipative_scale(S))


def isotropic_verdict(D3, samples=2000, seed=42, tol=nm.PSD_TOL, scale=None):
    value, v = isotropic_minimum(D3, samples, seed)
    if scale is None:
        scale = max(float(np.linalg.norm(D3)), 1e-300)
    if value < -tol * scale:
        return ConeVerdict("P_k", NOT_MEMBER, value, k=1, witness=v, witness_kind="isotropic", note="pauli")
    return ConeVerdict("P_k", NO_WITNESS, value, k=1, note="pauli")


def unitality_residuals(S):
    """Residuals of the identity-preservation relations in the halved Pauli basis.

    Entry 0 is ``sum_p D_pp``; entries 1..3 are
    ``(D_p0 + D_0p) + i (D_qr - D_rq)`` for cyclic ``(p, q, r)``.
    """
    D = pauli_coefficients(S, halved=True)
    out = [complex(np.trace(D))]
    for p, q, r in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        out.append(complex(D[p, 0] + D[0, p] + 1j * (D[q, r] - D[r, q])))
    return np.array(out)


def unitality_relations_check(S, tol=1e-10):
    scale = max(1.0, _dissipative_scale(S))
    return bool(np.max(np.abs(unitality_residuals(S))) <= tol * scale)


# -- idempotent-started semigroups ------------------------------------------------

def exp_idempotent(pair, t, tol=1e-12, method="auto"):
    """``exp_{T0}(tS) = T0 + sum_{m>=1} (tS)^m / m!``.

    ``method="series"`` sums the series literally, stopping once the
    factorial tail bound ``(t|S|)^(M+1)/(M+1)!`` is below ``tol`` (``|S|`` is
    the Frobenius norm of the natural matrix). ``method="product"`` uses the
    identity ``exp_{T0}(tS) = exp(tS) T0``, which follows from ``S T0 = S``
    and avoids cancellation for large ``t|S|``. ``"auto"`` picks the series
    when ``t|S| <= 1``.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    N0 = pair.T0.natural
    NS = pair.S.natural
    a = t * float(np.linalg.norm(NS))
    if method == "auto":
        method = "series" if a <= 1.0 else "product"
    if method == "product":
        return SuperOp.from_natural(nm.expm(t * NS) @ N0)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    total = np.array(N0, dtype=np.complex128)
    term = np.eye(N0.shape[0], dtype=np.complex128)
    bound = 1.0
    m = 0
    while True:
        m += 1
        term = term @ (t * NS) / m
        total = total + term
        bound *= a / (m + 1)
        if bound <= tol or m > 10000:
            break
    return SuperOp.from_natural(total)


def _constraint_rows(T0, tol=1e-10):
    """Rows spanning the annihilator of ``ker C_{T0}``.

    For CP ``T0``, ``<T_{V (x) V^*}, T0> = vec(V)^* C_{T0} vec(V) = 0`` holds
    exactly when ``vec(V)`` lies in the kernel of ``C_{T0}``.
    """
    C = T0.choi
    if not nm.is_hermitian(C, 1e-10):
        raise UnsupportedIdempotentError("idempotent is not hermitianity-preserving")
    w, U = nm.hermitian_eig(C)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -nm.PSD_TOL * scale:
        raise UnsupportedIdempotentError(
            "the constraint <T_{V (x) V*}, T0> = 0 is linear in V only for completely positive T0; "
            f"this T0 has Choi eigenvalue {w[0]:.6g}"
        )
    keep = w > tol * scale
    return U[:, keep].conj().T


def conditional_positivity(pair, k, samples=None, seed=42, tol=nm.PSD_TOL, restarts=None):
    """Search for ``V`` (rank <= k, ``<T_{V (x) V^*}, T0> = 0``) with ``<T_{V (x) V^*}, S> < 0``.

    The constraint reduces to ``vec(V)`` in ``ker C_{T0}``. When that kernel
    is a hyperplane ``Tr(K V) = 0`` (e.g. ``T0 = Id`` gives traceless ``V``)
    the sampler draws from it directly; an empty kernel makes the condition
    vacuous.
    """
    from mapcones.cones import RESTARTS, _hermitian_choi, default_samples

    n = pair.S.n
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    rows = _constraint_rows(pair.T0)
    C = _hermitian_choi(pair.S)
    if rows.shape[0] == n * n:
        return ConeVerdict("P_k", NO_WITNESS, 0.0, k=k, note="constraint set is {0}")
    samples = default_samples(n) if samples is None else samples
    restarts = RESTARTS if restarts is None else restarts
    thresh = -tol * _dissipative_scale(pair.S)
    rng = nm.make_rng(seed)
    if rows.shape[0] == 1:
        K = nm.unvec(rows[0], n).T
        q, V = search_negative_form(C, k, thresh, samples, rng, restarts=restarts, K=K)
    else:
        cons = rows if rows.shape[0] else None
        q, V = search_negative_form(C, k, thresh, samples, rng, restarts=restarts, cons=cons)
    if V is not None and q < thresh:
        return ConeVerdict("P_k", NOT_MEMBER, q, k=k, witness=V, witness_kind="matrix", note="conditional")
    return ConeVerdict("P_k", NO_WITNESS, float(q), k=k, note="conditional")


def semigroup_split(T0):
    """Spectral projections of an idempotent onto its image and kernel.

    For an idempotent the projection onto the image along the kernel is ``T0``
    itself and the complementary one is ``Id - T0``.
    """
    d = idempotent_defect(T0)
    if d > IDEMPOTENT_TOL * max(1.0, _opnorm(T0)):
        raise NotIdempotentError(f"not idempotent: |T0 T0 - T0| = {d:.3e}", defect=d)
    n = T0.n
    dim_im = int(round(float(np.real(np.trace(T0.natural)))))
    proj_ker = identity(n) - T0
    return T0, proj_ker, (dim_im, n * n - dim_im)


def compression_idempotent(P_proj, n=None):
    """``X -> P X P`` for an orthogonal projection ``P``."""
    P = nm.as_cmatrix(P_proj)
    if n is not None and P.shape != (n, n):
        raise DimensionError(f"projection of shape {P.shape}, expected {(n, n)}")
    scale = 1.0 + float(np.max(np.abs(P)))
    if nm.hermitian_defect(P) > 1e-12 * scale or float(np.max(np.abs(P @ P - P))) > 1e-12 * scale:
        raise PreconditionError("matrix is not an orthogonal projection")
    p = nm.vec(P)
    return SuperOp.from_choi(np.outer(p, p.conj()))


def lift_block_map(S, alpha):
    """Map on ``M_{2n}``: ``[[A, B], [C, D]] -> [[S(A), 0], [0, alpha(S(A))]]``."""
    n = S.n
    if alpha.n != n:
        raise DimensionError(f"alpha acts on M_{alpha.n}, S on M_{n}")
    if not alpha.is_hermitian_preserving:
        raise NotHermitianError("alpha must be hermitianity-preserving")

    def fn(X):
        A = S(X[:n, :n])
        out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        out[:n, :n] = A
        out[n:, n:] = alpha(A)
        return out

    return SuperOp.from_function(fn, 2 * n)


def grid_verdict(S, ts, test):
    """First grid time at which ``test(exp(tS))`` reports ``NotMember``."""
    for t in ts:
        v = test(evolve(S, t))
        if v.status == NOT_MEMBER:
            return t, v
    return None, None

