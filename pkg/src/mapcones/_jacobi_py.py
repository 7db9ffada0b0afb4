"""Pure numpy cyclic Jacobi eigensolver, used when the compiled kernel is absent."""

import numpy as np


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    """Diagonalise the hermitian matrix ``a`` by cyclic Jacobi rotations.

    Same contract as the compiled kernel: returns ``(w, v, sweeps)`` with
    ascending eigenvalues ``w`` and unitary ``v``.
    """
    A = np.array(a, dtype=np.complex128, copy=True)
    A = 0.5 * (A + A.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    frob = np.linalg.norm(A)
    sweep = 0
    while sweep < max_sweeps:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * frob or off == 0.0:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                apq_abs = abs(apq)
                if apq_abs <= 1e-300:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                if apq_abs <= 1e-17 * (abs(app) + abs(aqq)):
                    # below rounding of the diagonal: drop it
                    A[p, q] = A[q, p] = 0.0
                    continue
                ph = apq / apq_abs
                theta = (aqq - app) / (2.0 * apq_abs)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                sph = t * c * ph
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - np.conj(sph) * col_q
                A[:, q] = sph * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - sph * row_q
                A[q, :] = np.conj(sph) * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                A[p, p] = app - t * apq_abs
                A[q, q] = aqq + t * apq_abs
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - np.conj(sph) * vq
                V[:, q] = sph * vp + c * vq
    w = np.real(np.diag(A)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweep
