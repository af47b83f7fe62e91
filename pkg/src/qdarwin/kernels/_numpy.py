"""Pure-numpy kernels.  Semantics must match ``_numba`` exactly."""
import numpy as np


def subset_gammas(overlaps):
    """Decoherence-factor matrices for every subset of the environment.

    ``overlaps[k]`` is the branch-overlap matrix of subsystem ``k``; entry
    ``mask`` of the result is the elementwise product over the set bits.
    """
    n_env, n, _ = overlaps.shape
    out = np.empty((1 << n_env, n, n), dtype=np.complex128)
    out[0] = 1.0
    for k in range(n_env):
        lo = 1 << k
        out[lo:2 * lo] = out[:lo] * overlaps[k]
    return out


def unitary_from_params(x, r):
    """``exp(-iH)`` with Hermitian ``H`` read from ``r*r`` real parameters."""
    h = np.zeros((r, r), dtype=np.complex128)
    h[np.diag_indices(r)] = x[:r]
    iu = np.triu_indices(r, 1)
    m = len(iu[0])
    h[iu] = x[r:r + m] + 1j * x[r + m:r + 2 * m]
    h = h + np.triu(h, 1).conj().T
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def basis_joint(ops, u):
    """``p[k, l] = <u_l| ops[k] |u_l>`` for the columns ``u_l`` of ``u``."""
    mu = np.einsum("kab,bl->kal", ops, u)
    p = np.einsum("al,kal->kl", u.conj(), mu).real
    return np.where(p < 0.0, 0.0, p)


def mutual_info_joint(p):
    """Mutual information (nats) of a joint table; 0 ln 0 = 0."""
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    outer = np.outer(pa, pb)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / outer[mask])))


def basis_info(x, ops, r):
    return mutual_info_joint(basis_joint(ops, unitary_from_params(x, r)))


def _rgs_table(n):
    """All restricted-growth strings of length ``n`` (one set partition per row)."""
    rows = [[0]]
    for _ in range(1, n):
        new = []
        for row in rows:
            top = max(row) + 1
            for b in range(top + 1):
                new.append(row + [b])
        rows = new
    return np.array(rows, dtype=np.int64)


def best_partition(qualify, n_env):
    """Max number of qualifying blocks over all set partitions of ``n_env`` items.

    ``qualify[mask]`` says whether the subset ``mask`` carries enough
    information.  Returns ``(count, block_masks)`` for the first maximiser in
    restricted-growth-string order.
    """
    rgs = _rgs_table(n_env)
    weights = 1 << np.arange(n_env, dtype=np.int64)
    onehot = rgs[:, None, :] == np.arange(n_env)[None, :, None]
    masks = (onehot * weights[None, None, :]).sum(axis=2)
    counted = (masks > 0) & qualify[masks]
    counts = counted.sum(axis=1)
    best = int(np.argmax(counts))
    blocks = masks[best][masks[best] > 0]
    return int(counts[best]), np.array(blocks, dtype=np.int64)
