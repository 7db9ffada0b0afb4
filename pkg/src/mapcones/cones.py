"""Membership verdicts for the cones of k-positive, CP, PPT and EB maps.

Exact tests (CP, PPT, EB for n = 2) return ``Member`` or ``NotMember``.
The k-positivity test for ``k < n`` is a witness search: it can prove
``NotMember`` but otherwise only reports ``NoWitnessFound``.

Witness search
--------------
For ``V`` in ``M_n`` the pairing of ``S`` with the extreme ray
``T_{V (x) V^*}`` of the dual cone is the quadratic form

    q(V) = <T_{V (x) V^*}, S> = vec(V)^* C_S vec(V),

so ``S`` is k-positive iff ``q >= 0`` on all ``V`` of rank at most ``k``.
We minimise ``q`` over unit-norm ``V = X Y^*`` by alternating exact
minimisation over ``X`` (``Y`` orthonormal) and over ``Y`` (``X``
orthonormal); each half-step is a hermitian eigenproblem of size ``n k``.
Optional linear constraints ``A vec(V) = 0`` are enforced inside every
half-step by restricting to the null space of the constraint.

Alternation crawls along narrow valleys (typically when ``C`` is close to
``|vec I><vec I|``), so unconstrained searches switch to BFGS on the real
coordinates of ``(X, Y)`` after a few sweeps.
"""

from dataclasses import dataclass

import numpy as np

from scipy.optimize import minimize

from mapcones import numerics as nm
from mapcones.errors import NotCompletelyPositiveError, NotHermitianError
from mapcones.superop import SuperOp, hs_inner

MEMBER = "Member"
NOT_MEMBER = "NotMember"
NO_WITNESS = "NoWitnessFound"

REFINE_STEPS = 200
RESTARTS = 20
ALS_SWEEPS = 10


@dataclass(frozen=True)
class ConeVerdict:
    """Outcome of a membership test.

    ``margin`` is the smallest value of the defining inequality seen (a minimum
    eigenvalue for exact tests, the best ``q(V)`` for witness searches).
    ``witness_kind`` says how to re-evaluate ``witness``: ``"choi"`` and
    ``"pt"`` are unit vectors tested against the Choi matrix or its partial
    transpose, ``"matrix"`` is a unit-norm ``V`` tested through ``q(V)``.
    """

    cone: str
    status: str
    margin: float
    k: int | None = None
    witness: np.ndarray | None = None
    witness_kind: str | None = None
    exact: bool = False
    note: str | None = None

    @property
    def is_member(self):
        return self.status == MEMBER

    @property
    def is_violated(self):
        return self.status == NOT_MEMBER

    def relabel(self, cone, **changes):
        fields = dict(self.__dict__)
        fields.update(cone=cone, **changes)
        return ConeVerdict(**fields)

    def to_dict(self):
        from mapcones.serialize import encode_matrix

        out = {"cone": self.cone}
        if self.k is not None:
            out["k"] = self.k
        out["status"] = self.status
        m = float(self.margin)
        out["margin"] = m if np.isfinite(m) else str(m)
        out["exact"] = self.exact
        if self.witness is not None:
            out["witness_kind"] = self.witness_kind
            w = self.witness
            out["witness"] = encode_matrix(w) if w.ndim == 2 else encode_matrix(w[:, None])
        if self.note:
            out["note"] = self.note
        return out


def default_samples(n):
    if n <= 3:
        return 20000
    return max(1000, int(20000 * 9 / (n * n)))


def _hermitian_choi(S):
    C = S.choi
    if not nm.is_hermitian(C, 1e-10):
        raise NotHermitianError(
            f"map is not hermitianity-preserving: max|C - C*| = {nm.hermitian_defect(C):.3e}"
        )
    return 0.5 * (C + C.conj().T)


def quadratic_form(C, V):
    """``vec(V)^* C vec(V)`` (real part)."""
    v = nm.vec(nm.as_cmatrix(V))
    return float(np.real(np.vdot(v, C @ v)))


def pairing_value(S, V):
    """``<T_{V (x) V^*}, S>`` for a single matrix ``V``."""
    return quadratic_form(S.choi, V)


def witness_value(S, verdict):
    """Re-evaluate a verdict's witness from scratch against ``S``."""
    w = verdict.witness
    if w is None:
        raise ValueError("verdict carries no witness")
    if verdict.witness_kind == "choi":
        return float(np.real(np.vdot(w, S.choi @ w)))
    if verdict.witness_kind == "pt":
        return float(np.real(np.vdot(w, nm.partial_transpose(S.choi) @ w)))
    if verdict.witness_kind == "matrix":
        return quadratic_form(S.choi, w) / float(np.linalg.norm(w) ** 2)
    raise ValueError(f"unknown witness kind {verdict.witness_kind!r}")


# -- exact tests ---------------------------------------------------------------

def _psd_verdict(M, cone, kind, tol):
    w, U = nm.hermitian_eig(M)
    thresh = nm.psd_threshold(w, tol)
    if w[0] >= -thresh:
        return ConeVerdict(cone, MEMBER, float(w[0]), exact=True)
    return ConeVerdict(cone, NOT_MEMBER, float(w[0]), witness=U[:, 0], witness_kind=kind, exact=True)


def is_cp(S, tol=nm.PSD_TOL):
    """Complete positivity via positivity of the Choi matrix."""
    return _psd_verdict(_hermitian_choi(S), "CP", "choi", tol)


def is_ppt(S, tol=nm.PSD_TOL):
    """Both the Choi matrix and its partial transpose are PSD."""
    C = _hermitian_choi(S)
    first = _psd_verdict(C, "PPT", "choi", tol)
    if first.is_violated:
        return first
    second = _psd_verdict(nm.partial_transpose(C), "PPT", "pt", tol)
    if second.is_violated:
        return second
    return ConeVerdict("PPT", MEMBER, min(first.margin, second.margin), exact=True)


def is_eb(S, tol=nm.PSD_TOL):
    """Entanglement breaking test.

    Exact for ``n = 2`` (PPT is equivalent to separability on 2 x 2). For
    larger ``n`` a PPT failure disproves membership, and a canonical Kraus
    decomposition made of rank-one operators proves it; anything else is
    inconclusive.
    """
    ppt = is_ppt(S, tol)
    if S.n <= 2 or ppt.is_violated:
        return ppt.relabel("EB")
    if kraus_rank_bound(S) <= 1:
        return ppt.relabel("EB", note="rank-one Kraus certificate")
    return ppt.relabel("EB", status=NO_WITNESS, exact=False)


def kraus_rank_bound(S, tol=1e-10):
    """Largest numerical rank among the canonical Kraus operators of a CP map.

    A value ``k`` certifies membership in the k-superpositive cone; since Kraus
    decompositions are not unique the bound can be loose.
    """
    try:
        ops = S.kraus
    except NotCompletelyPositiveError:
        raise
    best = 0
    for L in ops:
        s = np.linalg.svd(L, compute_uv=False)
        best = max(best, int(np.sum(s > tol * s[0])))
    return best


def dual_pairing(S1, S2, imag_tol=1e-10):
    """Real Hilbert-Schmidt pairing of two hermitianity-preserving maps."""
    _hermitian_choi(S1)
    _hermitian_choi(S2)
    z = hs_inner(S1, S2)
    if abs(z.imag) > imag_tol * (1.0 + abs(z)):
        raise NotHermitianError(f"pairing has imaginary part {z.imag:.3e}")
    return z.real


# -- witness search --------------------------------------------------------------

def _null_space(A, n_cols):
    if A is None or A.shape[0] == 0:
        return None
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if len(s) else 0.0)))
    return vh[rank:].conj().T if rank < n_cols else np.zeros((n_cols, 0), dtype=np.complex128)


def _half_step(C, M, cons):
    """Minimise the form over ``v = M u`` with unit ``u`` and ``cons v = 0``."""
    G = M.conj().T @ C @ M
    Z = _null_space(None if cons is None else cons @ M, M.shape[1])
    if Z is not None:
        if Z.shape[1] == 0:
            return None, None
        G = Z.conj().T @ G @ Z
    G = 0.5 * (G + G.conj().T)
    w, U = nm.hermitian_eig(G)
    u = U[:, 0] if Z is None else Z @ U[:, 0]
    return float(w[0]), u


def _factor(V, k):
    U, s, Wh = np.linalg.svd(V)
    return U[:, :k] * s[:k], Wh[:k].conj().T


def _als(C, X, Y, k, steps, cons, conv):
    n = X.shape[0]
    eye = np.eye(n)
    q_prev = np.inf
    scale = max(1.0, float(np.max(np.abs(C))))
    for _ in range(steps):
        Y, R = np.linalg.qr(Y)
        X = X @ R.conj().T
        M_Y = np.einsum("br,ac->barc", Y.conj(), eye).reshape(n * n, k * n)
        q, x = _half_step(C, M_Y, cons)
        if q is None:
            return None, None
        X = x.reshape((n, k), order="F")
        X, R = np.linalg.qr(X)
        Y = Y @ R.conj().T
        M_X = np.einsum("bc,ar->barc", eye, X).reshape(n * n, k * n)
        q, z = _half_step(C, M_X, cons)
        if q is None:
            return None, None
        Y = z.reshape((n, k), order="F").conj()
        if abs(q_prev - q) <= conv * scale:
            break
        q_prev = q
    return X, Y


def _polish(C, X, Y, maxiter):
    """BFGS on the Rayleigh quotient of ``vec(X Y^*)``."""
    n, k = X.shape
    m = n * k

    def unpack(z):
        w = z[: 2 * m] + 1j * z[2 * m:]
        return w[:m].reshape(n, k), w[m:].reshape(n, k)

    def f(z):
        X, Y = unpack(z)
        v = (X @ Y.conj().T).reshape(-1, order="F")
        nrm = np.vdot(v, v).real
        Cv = C @ v
        q = np.vdot(v, Cv).real / nrm
        # G = 2 dq/d conj(W)
        G = (Cv - q * v).reshape(n, n, order="F") * (2.0 / nrm)
        g = np.concatenate([(G @ Y).ravel(), (G.conj().T @ X).ravel()])
        return q, np.concatenate([g.real, g.imag])

    w = np.concatenate([X.ravel(), Y.ravel()])
    res = minimize(f, np.concatenate([w.real, w.imag]), jac=True, method="BFGS",
                   options={"gtol": 1e-12, "maxiter": maxiter})
    return unpack(res.x)


def refine(C, V, k, steps=REFINE_STEPS, cons=None, conv=1e-13):
    """Minimise ``q`` over rank-k ``V`` starting from ``V``; returns ``(q, V)``.

    ``cons`` is an ``(r, n*n)`` array; iterates satisfy ``cons @ vec(V) = 0``
    after the first half-step and the search stays alternating throughout.
    Without constraints at most ``ALS_SWEEPS`` sweeps run before BFGS takes
    over with ``steps`` iterations. Returns ``(None, None)`` when the
    constraint leaves no feasible direction.
    """
    X, Y = _factor(V, k)
    sweeps = steps if cons is not None else min(steps, ALS_SWEEPS)
    X, Y = _als(C, X, Y, k, sweeps, cons, conv)
    if X is None:
        return None, None
    V = X @ Y.conj().T
    V = V / np.linalg.norm(V)
    q = quadratic_form(C, V)
    if cons is None and steps > sweeps:
        X2, Y2 = _polish(C, X, Y, steps)
        V2 = X2 @ Y2.conj().T
        nrm = np.linalg.norm(V2)
        if nrm > 0:
            V2 = V2 / nrm
            q2 = quadratic_form(C, V2)
            if q2 < q:
                q, V = q2, V2
    return q, V


def _batch_forms(C, Vs):
    m, n, _ = Vs.shape
    v = Vs.transpose(0, 2, 1).reshape(m, n * n)
    return np.real(np.einsum("mi,ij,mj->m", v.conj(), C, v))


def search_negative_form(
    C,
    k,
    threshold,
    samples,
    rng,
    restarts=RESTARTS,
    steps=REFINE_STEPS,
    K=None,
    cons=None,
    starts=(),
):
    """Look for unit ``V`` with ``rank V <= k`` and ``q(V) < threshold``.

    Candidates are the explicit ``starts`` followed by the ``restarts`` best
    of ``samples`` random rank-k matrices; each is refined by :func:`refine`.
    With ``K`` the samples satisfy ``Tr(K V) = 0`` and the refinement keeps
    that constraint; ``cons`` imposes general linear constraints (then the
    random candidates are unconstrained and the first half-step projects).
    Returns ``(best_q, best_V)``; stops at the first refined ``q < threshold``.
    """
    n = nm.square_root_dim(C.shape[0])
    if K is not None:
        row = nm.vec(nm.as_cmatrix(K).T)[None, :]
        cons = row if cons is None else np.vstack([cons, row])
    candidates = [nm.as_cmatrix(V) for V in starts]
    if samples > 0 and restarts > 0:
        if K is not None:
            Vs = nm.sample_rank_k_batch(n, k, samples, rng, K)
        else:
            Vs = nm.sample_rank_k(n, k, samples, rng)
        if cons is not None and K is None:
            pool = Vs[:restarts]
        else:
            q = _batch_forms(C, Vs) / np.sum(np.abs(Vs) ** 2, axis=(1, 2))
            pool = Vs[np.argsort(q, kind="stable")[:restarts]]
        candidates.extend(pool)
    best_q, best_V = np.inf, None
    for V0 in candidates:
        q, V = refine(C, V0, k, steps, cons)
        if q is None:
            continue
        if q < best_q:
            best_q, best_V = q, V
        if best_q < threshold:
            break
    return best_q, best_V


def is_k_positive_witnessed(
    S,
    k,
    samples=None,
    refine_steps=REFINE_STEPS,
    seed=42,
    tol=nm.PSD_TOL,
    restarts=RESTARTS,
    starts=(),
):
    """One-sided k-positivity test by searching for a rank-k witness ``V``.

    ``NotMember`` carries ``V`` (unit Frobenius norm) with ``q(V) < -tol``
    (tol relative to the largest Choi eigenvalue in magnitude); otherwise
    ``NoWitnessFound``. For ``k = n`` the first refinement half-step is
    already the exact minimum eigenvalue, so the result matches :func:`is_cp`.
    """
    n = S.n
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    C = _hermitian_choi(S)
    if samples is None:
        samples = default_samples(n)
    w = nm.eigvalsh(C)
    thresh = -nm.psd_threshold(w, tol)
    q, V = search_negative_form(
        C, k, thresh, samples, nm.make_rng(seed), restarts=restarts, steps=refine_steps, starts=starts
    )
    if V is not None and q < thresh:
        return ConeVerdict("P_k", NOT_MEMBER, q, k=k, witness=V, witness_kind="matrix")
    return ConeVerdict("P_k", NO_WITNESS, float(q), k=k)
