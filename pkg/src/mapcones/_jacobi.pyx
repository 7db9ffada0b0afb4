# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic Jacobi eigensolver for complex hermitian matrices."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def jacobi_eigh(a, double tol=1e-15, int max_sweeps=100):
    """Diagonalise the hermitian matrix ``a`` by cyclic Jacobi rotations.

    Returns ``(w, v, sweeps)`` with ``a = v @ diag(w) @ v.conj().T`` and the
    eigenvalues in ascending order.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] A = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] V = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a_ = A
    cdef double complex[:, ::1] v_ = V
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, frob, apq_abs, theta, t, c, s
    cdef double complex apq, ph, sph, akp, akq, apk, aqk
    cdef double app, aqq

    with nogil:
        # symmetrise and drop imaginary parts on the diagonal
        for p in range(n):
            a_[p, p] = a_[p, p].real
            for q in range(p + 1, n):
                apq = 0.5 * (a_[p, q] + a_[q, p].conjugate())
                a_[p, q] = apq
                a_[q, p] = apq.conjugate()
        frob = 0.0
        for p in range(n):
            for q in range(n):
                frob += cabs2(a_[p, q])
        frob = sqrt(frob)

        while sweep < max_sweeps:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += cabs2(a_[p, q])
            off = sqrt(2.0 * off)
            if off <= tol * frob or off == 0.0:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a_[p, q]
                    apq_abs = hypot(apq.real, apq.imag)
                    if apq_abs <= 1e-300:
                        continue
                    app = a_[p, p].real
                    aqq = a_[q, q].real
                    if apq_abs <= 1e-17 * (fabs(app) + fabs(aqq)):
                        # below rounding of the diagonal: drop it
                        a_[p, q] = 0.0
                        a_[q, p] = 0.0
                        continue
                    # component-wise: complex division would square apq_abs and underflow
                    ph.real = apq.real / apq_abs
                    ph.imag = apq.imag / apq_abs
                    theta = (aqq - app) / (2.0 * apq_abs)
                    if theta >= 0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    sph = s * ph
                    # columns: A <- A G
                    for k in range(n):
                        akp = a_[k, p]
                        akq = a_[k, q]
                        a_[k, p] = c * akp - sph.conjugate() * akq
                        a_[k, q] = sph * akp + c * akq
                    # rows: A <- G^H A
                    for k in range(n):
                        apk = a_[p, k]
                        aqk = a_[q, k]
                        a_[p, k] = c * apk - sph * aqk
                        a_[q, k] = sph.conjugate() * apk + c * aqk
                    a_[p, q] = 0.0
                    a_[q, p] = 0.0
                    a_[p, p] = app - t * apq_abs
                    a_[q, q] = aqq + t * apq_abs
                    for k in range(n):
                        akp = v_[k, p]
                        akq = v_[k, q]
                        v_[k, p] = c * akp - sph.conjugate() * akq
                        v_[k, q] = sph * akp + c * akq

    w = np.real(np.diag(A)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweep
