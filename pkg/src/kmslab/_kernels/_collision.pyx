# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the kinetic collision operator.

Both functions mirror ``_pure.py`` operation for operation so the two
backends agree bitwise on the same inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, M_PI

cnp.import_array()


def collision_sum(const double[::1] rho,
                  const long long[::1] i1, const long long[::1] i2,
                  const long long[::1] i3, const long long[::1] i4,
                  const double[::1] weight, bint bilinear=False):
    cdef Py_ssize_t n = rho.shape[0], m = weight.shape[0], q
    cdef double r1, r2, r3, r4, g
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = out
    with nogil:
        for q in range(m):
            r1 = rho[i1[q]]
            r2 = rho[i2[q]]
            r3 = rho[i3[q]]
            r4 = rho[i4[q]]
            if bilinear:
                g = r3 * r4 - r1 * r2
            else:
                g = r3 * r4 * (1.0 - r1) * (1.0 - r2) - r1 * r2 * (1.0 - r3) * (1.0 - r4)
            acc[i1[q]] += weight[q] * g
    return out


def enumerate_quadruples(const long long[:, ::1] kvec, long long side,
                         const double[::1] eps, double tol,
                         bint broadened=False, double eta=0.1):
    """Momentum-conserving ``(p1, p2, p3, p4)`` with shell weights.

    ``p4 = p1 + p2 - p3`` (mod ``side`` per axis).  Exact-shell mode keeps
    quadruples with ``|de| <= tol`` at weight 1; broadened mode keeps all with
    a normalized Gaussian weight of width ``eta``.  Trivial quadruples
    ``{p3, p4} == {p1, p2}`` contribute nothing and are skipped.
    """
    cdef Py_ssize_t n = kvec.shape[0], d = kvec.shape[1]
    cdef Py_ssize_t a, b, c, e, ax, count = 0, cap = 1024
    cdef long long comp, idx
    cdef double de, norm = 1.0 / (eta * sqrt(2.0 * M_PI))
    o1 = np.empty(cap, dtype=np.int64)
    o2 = np.empty(cap, dtype=np.int64)
    o3 = np.empty(cap, dtype=np.int64)
    o4 = np.empty(cap, dtype=np.int64)
    ow = np.empty(cap, dtype=np.float64)
    cdef long long[::1] v1 = o1, v2 = o2, v3 = o3, v4 = o4
    cdef double[::1] vw = ow
    for a in range(n):
        for b in range(n):
            for c in range(n):
                idx = 0
                for ax in range(d):
                    comp = (kvec[a, ax] + kvec[b, ax] - kvec[c, ax]) % side
                    if comp < 0:
                        comp += side
                    idx = idx * side + comp
                e = idx
                if (c == a and e == b) or (c == b and e == a):
                    continue
                de = eps[a] + eps[b] - eps[c] - eps[e]
                if not broadened and fabs(de) > tol:
                    continue
                if count == cap:
                    cap *= 2
                    o1 = np.resize(o1, cap); o2 = np.resize(o2, cap)
                    o3 = np.resize(o3, cap); o4 = np.resize(o4, cap)
                    ow = np.resize(ow, cap)
                    v1 = o1; v2 = o2; v3 = o3; v4 = o4; vw = ow
                v1[count] = a
                v2[count] = b
                v3[count] = c
                v4[count] = e
                if broadened:
                    vw[count] = norm * exp(-0.5 * (de / eta) * (de / eta))
                else:
                    vw[count] = 1.0
                count += 1
    return o1[:count].copy(), o2[:count].copy(), o3[:count].copy(), o4[:count].copy(), ow[:count].copy()
