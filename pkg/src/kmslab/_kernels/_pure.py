"""NumPy fallback for the compiled collision kernels (same contract as ``_collision.pyx``)."""

import math

import numpy as np


def collision_sum(rho, i1, i2, i3, i4, weight, bilinear=False):
    r1, r2, r3, r4 = rho[i1], rho[i2], rho[i3], rho[i4]
    if bilinear:
        g = r3 * r4 - r1 * r2
    else:
        g = r3 * r4 * (1.0 - r1) * (1.0 - r2) - r1 * r2 * (1.0 - r3) * (1.0 - r4)
    # bincount accumulates in index order, matching the compiled loop
    return np.bincount(i1, weights=weight * g, minlength=rho.shape[0])


def enumerate_quadruples(kvec, side, eps, tol, broadened=False, eta=0.1):
    n, d = kvec.shape
    norm = 1.0 / (eta * math.sqrt(2.0 * math.pi))
    b, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    b = b.ravel()
    c = c.ravel()
    chunks = []
    for a in range(n):
        comp = (kvec[a][None, :] + kvec[b] - kvec[c]) % side
        e = np.zeros(len(b), dtype=np.int64)
        for ax in range(d):
            e = e * side + comp[:, ax]
        keep = ~(((c == a) & (e == b)) | ((c == b) & (e == a)))
        de = eps[a] + eps[b] - eps[c] - eps[e]
        if not broadened:
            keep &= np.abs(de) <= tol
        bb, cc, ee, dd = b[keep], c[keep], e[keep], de[keep]
        if broadened:
            w = norm * np.exp(-0.5 * (dd / eta) * (dd / eta))
        else:
            w = np.ones(len(bb))
        chunks.append((np.full(len(bb), a, dtype=np.int64), bb, cc, ee, w))
    return tuple(np.concatenate([ch[k] for ch in chunks]) for k in range(5))
