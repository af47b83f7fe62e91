"""numba kernels mirroring ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True)
def subset_gammas(overlaps):
    n_env, n, _ = overlaps.shape
    out = np.empty((1 << n_env, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[0, i, j] = 1.0
    for k in range(n_env):
        lo = 1 << k
        for m in range(lo):
            for i in range(n):
                for j in range(n):
                    out[lo + m, i, j] = out[m, i, j] * overlaps[k, i, j]
    return out


@njit(cache=True)
def unitary_from_params(x, r):
    h = np.zeros((r, r), dtype=np.complex128)
    for i in range(r):
        h[i, i] = x[i]
    m = r * (r - 1) // 2
    c = 0
    for i in range(r):
        for j in range(i + 1, r):
            h[i, j] = x[r + c] + 1j * x[r + m + c]
            h[j, i] = x[r + c] - 1j * x[r + m + c]
            c += 1
    w, v = np.linalg.eigh(h)
    u = np.zeros((r, r), dtype=np.complex128)
    for a in range(r):
        for b in range(r):
            acc = 0j
            for k in range(r):
                acc += v[a, k] * np.exp(-1j * w[k]) * np.conj(v[b, k])
            u[a, b] = acc
    return u


@njit(cache=True)
def basis_joint(ops, u):
    n_k, r, _ = ops.shape
    n_l = u.shape[1]
    p = np.empty((n_k, n_l))
    for k in range(n_k):
        for l in range(n_l):
            acc = 0j
            for a in range(r):
                row = 0j
                for b in range(r):
                    row += ops[k, a, b] * u[b, l]
                acc += np.conj(u[a, l]) * row
            v = acc.real
            p[k, l] = v if v > 0.0 else 0.0
    return p


@njit(cache=True)
def mutual_info_joint(p):
    n_k, n_l = p.shape
    pa = np.zeros(n_k)
    pb = np.zeros(n_l)
    for k in range(n_k):
        for l in range(n_l):
            pa[k] += p[k, l]
            pb[l] += p[k, l]
    total = 0.0
    for k in range(n_k):
        for l in range(n_l):
            v = p[k, l]
            if v > 0.0:
                total += v * np.log(v / (pa[k] * pb[l]))
    return total


@njit(cache=True)
def basis_info(x, ops, r):
    return mutual_info_joint(basis_joint(ops, unitary_from_params(x, r)))


@njit(cache=True)
def _best_partition(qualify, n_env):
    rgs = np.zeros(n_env, dtype=np.int64)
    top = np.zeros(n_env, dtype=np.int64)  # top[i] = max(rgs[:i+1])
    masks = np.zeros(n_env, dtype=np.int64)
    best_count = -1
    best_masks = np.zeros(n_env, dtype=np.int64)
    while True:
        for b in range(n_env):
            masks[b] = 0
        for i in range(n_env):
            masks[rgs[i]] |= 1 << i
        count = 0
        for b in range(n_env):
            if masks[b] > 0 and qualify[masks[b]]:
                count += 1
        if count > best_count:
            best_count = count
            for b in range(n_env):
                best_masks[b] = masks[b]
        # next restricted-growth string in lexicographic order
        i = n_env - 1
        while i > 0 and rgs[i] == top[i - 1] + 1:
            i -= 1
        if i == 0:
            break
        rgs[i] += 1
        top[i] = max(top[i - 1], rgs[i])
        for j in range(i + 1, n_env):
            rgs[j] = 0
            top[j] = top[i]
    return best_count, best_masks


def best_partition(qualify, n_env):
    count, masks = _best_partition(qualify, n_env)
    return int(count), masks[masks > 0].copy()
