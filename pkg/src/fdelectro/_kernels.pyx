# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled relaxation kernels.

Mirror of ``_kernels_py``: same signatures, same floating-point operation
order, so both backends produce the same iterates.
"""
from libc.math cimport log, fabs

cdef int MAX_NEWTON = 50
cdef double TINY = 1e-300


cdef inline double _face(double[:, :, ::1] u, double[:, :, ::1] v, double[:, :, ::1] w,
                         double[:, :, ::1] iu, double[:, :, ::1] iv, double[:, :, ::1] iw,
                         Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                         Py_ssize_t ip, Py_ssize_t jp, Py_ssize_t kp,
                         int axis, double* dsum) nogil:
    cdef double circ, esig, eta
    if axis == 0:
        circ = 0.0 + v[i, j, k] * iv[i, j, k]
        circ = circ + w[i, jp, k] * iw[i, jp, k]
        circ = circ - v[i, j, kp] * iv[i, j, kp]
        circ = circ - w[i, j, k] * iw[i, j, k]
        esig = 0.0 + iv[i, j, k]
        esig = esig + iw[i, jp, k]
        esig = esig + iv[i, j, kp]
        esig = esig + iw[i, j, k]
        eta = -circ / esig
        v[i, j, k] += eta
        w[i, jp, k] += eta
        v[i, j, kp] -= eta
        w[i, j, k] -= eta
    elif axis == 1:
        circ = 0.0 + w[i, j, k] * iw[i, j, k]
        circ = circ + u[i, j, kp] * iu[i, j, kp]
        circ = circ - w[ip, j, k] * iw[ip, j, k]
        circ = circ - u[i, j, k] * iu[i, j, k]
        esig = 0.0 + iw[i, j, k]
        esig = esig + iu[i, j, kp]
        esig = esig + iw[ip, j, k]
        esig = esig + iu[i, j, k]
        eta = -circ / esig
        w[i, j, k] += eta
        u[i, j, kp] += eta
        w[ip, j, k] -= eta
        u[i, j, k] -= eta
    else:
        circ = 0.0 + u[i, j, k] * iu[i, j, k]
        circ = circ + v[ip, j, k] * iv[ip, j, k]
        circ = circ - u[i, jp, k] * iu[i, jp, k]
        circ = circ - v[i, j, k] * iv[i, j, k]
        esig = 0.0 + iu[i, j, k]
        esig = esig + iv[ip, j, k]
        esig = esig + iu[i, jp, k]
        esig = esig + iv[i, j, k]
        eta = -circ / esig
        u[i, j, k] += eta
        v[ip, j, k] += eta
        u[i, jp, k] -= eta
        v[i, j, k] -= eta
    dsum[0] += 0.5 * esig * eta * eta
    return eta


cdef int _zeta(double alpha, double beta, double gamma, double a, double b, double* out) nogil:
    # 0 ok, 1 iteration cap hit
    cdef double c = b * gamma
    cdef double tol = 1e-12 * (1.0 + fabs(c))
    cdef double lo = -beta
    cdef double hi = alpha
    cdef double z = 0.0
    cdef double f, df, zn
    cdef int it
    for it in range(MAX_NEWTON):
        f = log(beta + z) - log(alpha - z) - c + a * z
        df = 1.0 / (beta + z) + 1.0 / (alpha - z) + a
        zn = z - f / df
        if fabs(f) <= tol:
            # one more Newton step takes the residual down to rounding level
            if lo < zn and zn < hi:
                z = zn
            out[0] = z
            return 0
        if f > 0.0:
            hi = z
        else:
            lo = z
        if not (lo < zn and zn < hi):
            zn = 0.5 * (lo + hi)
        if zn == z:
            out[0] = z
            return 0
        z = zn
    out[0] = z
    return 1


def zeta_root(double alpha, double beta, double gamma, double a, double b):
    cdef double z
    if _zeta(alpha, beta, gamma, a, b, &z):
        raise ArithmeticError("zeta iteration did not converge")
    return z


def face_relax(double[:, :, ::1] u, double[:, :, ::1] v, double[:, :, ::1] w,
               double[:, :, ::1] iu, double[:, :, ::1] iv, double[:, :, ::1] iw,
               Py_ssize_t i, Py_ssize_t j, Py_ssize_t k, int axis):
    cdef Py_ssize_t n = u.shape[0]
    cdef double dsum = 0.0
    cdef Py_ssize_t ip = i + 1 if i + 1 < n else 0
    cdef Py_ssize_t jp = j + 1 if j + 1 < n else 0
    cdef Py_ssize_t kp = k + 1 if k + 1 < n else 0
    return _face(u, v, w, iu, iv, iw, i, j, k, ip, jp, kp, axis, &dsum)


def poisson_sweep(double[:, :, ::1] u, double[:, :, ::1] v, double[:, :, ::1] w,
                  double[:, :, ::1] iu, double[:, :, ::1] iv, double[:, :, ::1] iw):
    """One lexicographic cycle of x, y, z face updates at every grid point.

    Returns ``(max |eta|, sum 0.5 * eps_sigma * eta**2)``; the energy drop is
    ``h**3`` times the second value.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j, k, ip, jp, kp
    cdef double eta, emax = 0.0, dsum = 0.0
    cdef int axis
    with nogil:
        for i in range(n):
            ip = i + 1 if i + 1 < n else 0
            for j in range(n):
                jp = j + 1 if j + 1 < n else 0
                for k in range(n):
                    kp = k + 1 if k + 1 < n else 0
                    for axis in range(3):
                        eta = fabs(_face(u, v, w, iu, iv, iw, i, j, k, ip, jp, kp, axis, &dsum))
                        if eta > emax:
                            emax = eta
    return emax, dsum


cdef inline int _edge(double[:, :, :, ::1] c, double[:, :, ::1] d, double[:, :, ::1] inv,
                      int s, double qs, double h,
                      Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                      Py_ssize_t i2, Py_ssize_t j2, Py_ssize_t k2,
                      double* zeta, int* clamped) nogil:
    cdef double alpha = c[s, i, j, k]
    cdef double beta = c[s, i2, j2, k2]
    cdef double r = inv[i, j, k]
    cdef double z
    cdef int status = _zeta(alpha, beta, d[i, j, k], h * h * qs * qs * r, h * qs * r, &z)
    cdef double lo = alpha - z
    cdef double hi = beta + z
    if lo < TINY:
        lo = TINY
        clamped[0] += 1
    if hi < TINY:
        hi = TINY
        clamped[0] += 1
    c[s, i, j, k] = lo
    c[s, i2, j2, k2] = hi
    d[i, j, k] -= h * qs * z
    zeta[0] = z
    return status


def edge_relax(double[:, :, :, ::1] c, double[:, :, ::1] u, double[:, :, ::1] v,
               double[:, :, ::1] w, double[:, :, ::1] iu, double[:, :, ::1] iv,
               double[:, :, ::1] iw, double[::1] q, double h,
               Py_ssize_t i, Py_ssize_t j, Py_ssize_t k, int axis, int s):
    cdef Py_ssize_t n = u.shape[0]
    cdef double z
    cdef int clamped = 0, status
    cdef Py_ssize_t ip = i + 1 if i + 1 < n else 0
    cdef Py_ssize_t jp = j + 1 if j + 1 < n else 0
    cdef Py_ssize_t kp = k + 1 if k + 1 < n else 0
    if axis == 0:
        status = _edge(c, u, iu, s, q[s], h, i, j, k, ip, j, k, &z, &clamped)
    elif axis == 1:
        status = _edge(c, v, iv, s, q[s], h, i, j, k, i, jp, k, &z, &clamped)
    else:
        status = _edge(c, w, iw, s, q[s], h, i, j, k, i, j, kp, &z, &clamped)
    if status:
        raise ArithmeticError("zeta iteration did not converge")
    return z, clamped


def pb_sweep(double[:, :, :, ::1] c, double[:, :, ::1] u, double[:, :, ::1] v,
             double[:, :, ::1] w, double[:, :, ::1] iu, double[:, :, ::1] iv,
             double[:, :, ::1] iw, double[::1] q, double h, bint interleave):
    """One cycle of ion-transfer edge updates, optionally followed per point by face updates.

    Returns ``(max |zeta|, max |eta|, clamp count)``.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef int m = q.shape[0]
    cdef Py_ssize_t i, j, k, ip, jp, kp
    cdef int s, axis, clamped = 0, failed = 0
    cdef double z, zmax = 0.0, emax = 0.0, eta, dsum = 0.0
    with nogil:
        for i in range(n):
            ip = i + 1 if i + 1 < n else 0
            for j in range(n):
                jp = j + 1 if j + 1 < n else 0
                for k in range(n):
                    kp = k + 1 if k + 1 < n else 0
                    for s in range(m):
                        failed |= _edge(c, u, iu, s, q[s], h, i, j, k, ip, j, k, &z, &clamped)
                        if fabs(z) > zmax:
                            zmax = fabs(z)
                    for s in range(m):
                        failed |= _edge(c, v, iv, s, q[s], h, i, j, k, i, jp, k, &z, &clamped)
                        if fabs(z) > zmax:
                            zmax = fabs(z)
                    for s in range(m):
                        failed |= _edge(c, w, iw, s, q[s], h, i, j, k, i, j, kp, &z, &clamped)
                        if fabs(z) > zmax:
                            zmax = fabs(z)
                    if interleave:
                        for axis in range(3):
                            eta = fabs(_face(u, v, w, iu, iv, iw, i, j, k, ip, jp, kp, axis, &dsum))
                            if eta > emax:
                                emax = eta
    if failed:
        raise ArithmeticError("zeta iteration did not converge")
    return zmax, emax, clamped
