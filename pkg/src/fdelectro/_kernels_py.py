"""Pure-Python relaxation kernels, used when the compiled extension is absent.

Signatures and floating-point operation order match ``_kernels.pyx`` exactly.
Sweeps copy the fields into flat Python lists, which index several times
faster than numpy scalars, and write them back at the end.
"""
from math import fabs, log

import numpy as np

from .operators import FACE_STENCILS

MAX_NEWTON = 50
TINY = 1e-300


def _zeta(alpha, beta, gamma, a, b):
    c = b * gamma
    tol = 1e-12 * (1.0 + fabs(c))
    lo = -beta
    hi = alpha
    z = 0.0
    for _ in range(MAX_NEWTON):
        f = log(beta + z) - log(alpha - z) - c + a * z
        df = 1.0 / (beta + z) + 1.0 / (alpha - z) + a
        zn = z - f / df
        if fabs(f) <= tol:
            # one more Newton step takes the residual down to rounding level
            if lo < zn and zn < hi:
                z = zn
            return z, 0
        if f > 0.0:
            hi = z
        else:
            lo = z
        if not (lo < zn and zn < hi):
            zn = 0.5 * (lo + hi)
        if zn == z:
            return z, 0
        z = zn
    return z, 1


def zeta_root(alpha, beta, gamma, a, b):
    z, status = _zeta(float(alpha), float(beta), float(gamma), float(a), float(b))
    if status:
        raise ArithmeticError("zeta iteration did not converge")
    return z


def _face(D, R, n, i, j, k, axis):
    """Relax one face on flat lists ``D = [u, v, w]``, ``R = [1/eu, 1/ev, 1/ew]``."""
    I = (i * n * n, ((i + 1) % n) * n * n)
    J = (j * n, ((j + 1) % n) * n)
    K = (k, (k + 1) % n)
    stencil = FACE_STENCILS[axis]
    idx = [I[o[0]] + J[o[1]] + K[o[2]] for _, o, _ in stencil]
    circ = 0.0
    esig = 0.0
    for (comp, _, sign), p in zip(stencil, idx):
        term = D[comp][p] * R[comp][p]
        circ = circ + term if sign > 0 else circ - term
    for (comp, _, _), p in zip(stencil, idx):
        esig = esig + R[comp][p]
    eta = -circ / esig
    for (comp, _, sign), p in zip(stencil, idx):
        if sign > 0:
            D[comp][p] += eta
        else:
            D[comp][p] -= eta
    return eta, 0.5 * esig * eta * eta


def _flat(*arrays):
    return [a.ravel().tolist() for a in arrays]


def _store(targets, lists):
    for a, lst in zip(targets, lists):
        a[...] = np.asarray(lst).reshape(a.shape)


def face_relax(u, v, w, iu, iv, iw, i, j, k, axis):
    n = u.shape[0]
    D = _flat(u, v, w)
    R = _flat(iu, iv, iw)
    eta, _ = _face(D, R, n, i, j, k, axis)
    _store((u, v, w), D)
    return eta


def poisson_sweep(u, v, w, iu, iv, iw):
    n = u.shape[0]
    D = _flat(u, v, w)
    R = _flat(iu, iv, iw)
    emax = 0.0
    dsum = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for axis in range(3):
                    eta, dF = _face(D, R, n, i, j, k, axis)
                    dsum += dF
                    if fabs(eta) > emax:
                        emax = fabs(eta)
    _store((u, v, w), D)
    return emax, dsum


def _edge(C, d, inv, s, qs, h, p, p2):
    alpha = C[s][p]
    beta = C[s][p2]
    r = inv[p]
    z, status = _zeta(alpha, beta, d[p], h * h * qs * qs * r, h * qs * r)
    lo = alpha - z
    hi = beta + z
    clamped = 0
    if lo < TINY:
        lo = TINY
        clamped += 1
    if hi < TINY:
        hi = TINY
        clamped += 1
    C[s][p] = lo
    C[s][p2] = hi
    d[p] -= h * qs * z
    return z, clamped, status


def _neighbour(n, i, j, k, axis):
    if axis == 0:
        return (((i + 1) % n) * n + j) * n + k
    if axis == 1:
        return (i * n + (j + 1) % n) * n + k
    return (i * n + j) * n + (k + 1) % n


def edge_relax(c, u, v, w, iu, iv, iw, q, h, i, j, k, axis, s):
    n = u.shape[0]
    C = [cs.ravel().tolist() for cs in c]
    D = _flat(u, v, w)
    R = _flat(iu, iv, iw)
    p = (i * n + j) * n + k
    z, clamped, status = _edge(C, D[axis], R[axis], s, float(q[s]), h, p, _neighbour(n, i, j, k, axis))
    if status:
        raise ArithmeticError("zeta iteration did not converge")
    _store(c, C)
    _store((u, v, w), D)
    return z, clamped


def pb_sweep(c, u, v, w, iu, iv, iw, q, h, interleave):
    n = u.shape[0]
    m = len(q)
    qs = [float(x) for x in q]
    C = [cs.ravel().tolist() for cs in c]
    D = _flat(u, v, w)
    R = _flat(iu, iv, iw)
    zmax = 0.0
    emax = 0.0
    clamped = 0
    failed = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                p = (i * n + j) * n + k
                for axis in range(3):
                    p2 = _neighbour(n, i, j, k, axis)
                    for s in range(m):
                        z, cl, st = _edge(C, D[axis], R[axis], s, qs[s], h, p, p2)
                        clamped += cl
                        failed |= st
                        if fabs(z) > zmax:
                            zmax = fabs(z)
                if interleave:
                    for axis in range(3):
                        eta, _ = _face(D, R, n, i, j, k, axis)
                        if fabs(eta) > emax:
                            emax = fabs(eta)
    if failed:
        raise ArithmeticError("zeta iteration did not converge")
    _store(c, C)
    _store((u, v, w), D)
    return zmax, emax, clamped
