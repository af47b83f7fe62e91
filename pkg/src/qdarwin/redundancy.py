"""Fragment-maximised information and redundancy of system observables.

Every fragment computation runs on a *compressed* copy of the fragment: an
orthonormal basis of the span of the branch states ``Phi_i^F`` (obtained from
their Gram matrix, i.e. from the decoherence factors alone), padded with
unoccupied directions up to ``min(dim F, r0**2)`` where ``r0`` is the span's
dimension.  Rank-one measurements with at most ``r0**2`` outcomes suffice to
reach the maximum over all measurements on the span, and each of them is the
restriction of a projective measurement on the padded space, so nothing is
lost by the compression while fragments of any size stay cheap.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import kernels
from .dynamics import (
    DENSE_BUDGET,
    BranchDecomposition,
    gamma_matrix,
    sf_space,
)
from .errors import BudgetError, DomainError, RegimeError, SpaceMismatchError
from .infotheory import entropy_unchecked, mutual_information
from .qstate import (
    Observable,
    SubsystemLabel,
    TensorSpace,
)
from .dynamics import reduced_state_S

STRATEGIES = ("branch-optimal", "parametrized-search", "exhaustive-small")
# exact partition enumeration up to this many environment subsystems
EXACT_PARTITION_MAX = 8
NO_INFO_TOL = 1e-12
# absolute slack when comparing fragment information with the threshold
QUALIFY_TOL = 1e-10
_SPAN_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementSearchConfig:
    strategy: str = "parametrized-search"
    restarts: int = 3
    tolerance: float = 1e-10
    max_iterations: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")

    def with_strategy(self, strategy: str) -> "MeasurementSearchConfig":
        return MeasurementSearchConfig(strategy, self.restarts, self.tolerance,
                                       self.max_iterations, self.seed)


def system_space(branches: BranchDecomposition) -> TensorSpace:
    return TensorSpace((SubsystemLabel(0, branches.n_branches),))


# ---------------------------------------------------------------- compression


def span_coordinates(gram: np.ndarray, tol: float = _SPAN_TOL):
    """Gram-Schmidt in coefficient space.

    Returns ``(coeffs, coords)`` with basis vector ``e_l = sum_m coeffs[l, m]
    Phi_m`` and ``coords[l, i] = <e_l | Phi_i>``; vectors whose residual norm
    squared is at most ``tol`` are skipped.  ``gram[i, j] = <Phi_i|Phi_j>``.
    """
    n = gram.shape[0]
    rows = []
    for i in range(n):
        u = np.zeros(n, dtype=complex)
        u[i] = 1.0
        for c in rows:
            u -= (c.conj() @ gram[:, i]) * c
        norm2 = float((u.conj() @ gram @ u).real)
        if norm2 > tol:
            rows.append(u / math.sqrt(norm2))
    coeffs = np.array(rows).reshape(len(rows), n)
    coords = coeffs.conj() @ gram
    return coeffs, coords


@dataclass(frozen=True, eq=False)
class CompressedFragment:
    """System plus compressed fragment.

    ``coords`` (``r x n``) holds the support branch states in the padded
    orthonormal frame; ``cross`` is ``alpha_i alpha_j^* gamma^Fbar_ij``.
    """

    members: tuple
    support: np.ndarray
    coeffs: np.ndarray
    coords: np.ndarray
    cross: np.ndarray
    span_dim: int
    fragment_dim: int

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def conditional_operators(self, obs_local: list) -> np.ndarray:
        """``M_k = Tr_S[(B_k ⊗ 1) rho]`` on the compressed fragment."""
        sup = self.support
        ops = np.empty((len(obs_local), self.dim, self.dim), dtype=complex)
        for k, bk in enumerate(obs_local):
            coef = self.cross * bk[np.ix_(sup, sup)].T
            ops[k] = self.coords @ coef @ self.coords.conj().T
        return ops


def compress(branches: BranchDecomposition, fragment) -> CompressedFragment:
    members = branches.check_fragment(fragment)
    sup = branches.support
    gamma_f = gamma_matrix(branches, members)[np.ix_(sup, sup)]
    gbar = gamma_matrix(branches, branches.complement(members))[np.ix_(sup, sup)]
    gram = gamma_f.T  # <Phi_i|Phi_j> = gamma_ji
    coeffs, coords = span_coordinates(gram)
    r0 = coords.shape[0]
    dims = [branches.branch_states[k].shape[1] for k in members]
    d_frag = math.prod(dims) if dims else 1
    r = max(r0, min(d_frag, r0 * r0))
    padded = np.zeros((r, len(sup)), dtype=complex)
    padded[:r0] = coords
    alpha = branches.amplitudes[sup]
    cross = np.outer(alpha, alpha.conj()) * gbar
    return CompressedFragment(members, sup, coeffs, padded, cross, r0, d_frag)


# ---------------------------------------------------------------- measurements


@dataclass(frozen=True, eq=False)
class FragmentMeasurement:
    """A rank-one measurement on a compressed fragment.

    Columns of ``basis`` are outcome vectors in the padded frame; ``groups``
    optionally merges them.  When the fragment is larger than the padded frame
    an extra outcome (the projector onto the unoccupied complement) completes
    the measurement in :meth:`to_observable`.
    """

    members: tuple
    basis: np.ndarray
    groups: tuple
    strategy: str
    compressed: CompressedFragment = field(repr=False)

    def probabilities(self, ops: np.ndarray) -> np.ndarray:
        p = kernels.basis_joint(ops, np.ascontiguousarray(self.basis))
        return _group_columns(p, self.groups)

    def fragment_vectors(self, branches: BranchDecomposition) -> np.ndarray:
        """Outcome vectors expressed on the actual fragment Hilbert space."""
        cf = self.compressed
        phi = branches.fragment_vectors(self.members)[cf.support]
        q = phi.T @ cf.coeffs.T
        d = q.shape[0]
        if cf.dim > cf.span_dim:
            # pad with directions orthogonal to the span, deterministic order
            proj = np.eye(d) - q @ q.conj().T
            extra = []
            for col in np.eye(d).T:
                v = proj @ col
                for e in extra:
                    v = v - np.vdot(e, v) * e
                if np.linalg.norm(v) > 1e-8:
                    extra.append(v / np.linalg.norm(v))
                if len(extra) == cf.dim - cf.span_dim:
                    break
            q = np.column_stack([q] + extra)
        return q @ self.basis

    def to_observable(self, branches: BranchDecomposition, space: TensorSpace = None) -> Observable:
        if space is None:
            space = sf_space(branches, self.members)
        vecs = self.fragment_vectors(branches)
        d = vecs.shape[0]
        if d > DENSE_BUDGET:
            raise BudgetError(f"fragment dimension {d} exceeds budget")
        labels = sorted(set(self.groups))
        projs = []
        for g in labels:
            cols = vecs[:, [k for k, gk in enumerate(self.groups) if gk == g]]
            projs.append(cols @ cols.conj().T)
        rest = np.eye(d) - sum(projs)
        if np.linalg.norm(rest) > 0.5:
            projs.append(0.5 * (rest + rest.conj().T))
        acts = tuple(k + 1 for k in self.members)
        return Observable.from_projectors(space, acts, projs)


def _group_columns(p: np.ndarray, groups) -> np.ndarray:
    labels = sorted(set(groups))
    if len(labels) == p.shape[1]:
        return p
    out = np.zeros((p.shape[0], len(labels)))
    for col, g in enumerate(groups):
        out[:, labels.index(g)] += p[:, col]
    return out


def _info(ops, u, groups=None) -> float:
    p = kernels.basis_joint(ops, np.ascontiguousarray(u))
    if groups is not None:
        p = _group_columns(p, groups)
    return float(kernels.mutual_info_joint(p))


def _haar_unitary(r: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))) / np.sqrt(2)
    q, rr = np.linalg.qr(z)
    return q * (np.diag(rr) / np.abs(np.diag(rr)))


def _polish_unitary(ops, u0, cfg):
    """Local ascent around ``u0`` in the exponential chart ``u0 exp(-iH)``."""
    r = u0.shape[0]
    rot = np.ascontiguousarray(np.einsum("ab,kbc,cd->kad", u0.conj().T, ops, u0))
    res = minimize(lambda x: -kernels.basis_info(x, rot, r), np.zeros(r * r),
                   method="L-BFGS-B",
                   options={"maxiter": cfg.max_iterations, "ftol": cfg.tolerance * 1e-3,
                            "gtol": 1e-10})
    u = u0 @ kernels.unitary_from_params(res.x, r)
    return _info(ops, u), u


def _search(ops, cf, cfg):
    """Multi-restart ascent; the branch basis is always the first start."""
    r = cf.dim
    best_val, best_u = _info(ops, np.eye(r)), np.eye(r, dtype=complex)
    if r == 1:
        return best_val, best_u
    rng = np.random.default_rng(cfg.seed)
    starts = [np.eye(r, dtype=complex)] + [_haar_unitary(r, rng) for _ in range(cfg.restarts)]
    for u0 in starts:
        val, u = _polish_unitary(ops, u0, cfg)
        if val > best_val:
            best_val, best_u = val, u
    return best_val, best_u


# -- exhaustive-small oracle: grid / quasi-random cover in an angle chart


def _qubit_basis(theta, phi):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    u = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    u[..., 0, 0], u[..., 1, 0] = c, e * s
    u[..., 0, 1], u[..., 1, 1] = -np.conj(e) * s, c
    return u


def _givens_basis(params, r):
    """Unitary from ``r*r - 1`` angles: left phases times a chain of Givens rotations."""
    u = np.eye(r, dtype=complex)
    k = 0
    for i in range(r - 1):
        for j in range(i + 1, r):
            th, ph = params[k], params[k + 1]
            k += 2
            g = np.eye(r, dtype=complex)
            g[i, i] = g[j, j] = np.cos(th)
            g[i, j] = -np.exp(-1j * ph) * np.sin(th)
            g[j, i] = np.exp(1j * ph) * np.sin(th)
            u = u @ g
    phases = np.concatenate([[0.0], params[k:k + r - 1]])
    return np.exp(1j * phases)[:, None] * u


def _batch_info(ops, us):
    p = np.einsum("nal,kab,nbl->nkl", us.conj(), ops, us).real
    p = np.where(p < 0, 0.0, p)
    pa = p.sum(axis=2, keepdims=True)
    pb = p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / (pa * pb)), 0.0)
    return terms.sum(axis=(1, 2))


def _exhaustive(ops, cf, cfg, grid: int = 181, samples: int = 4096, polish: int = 6):
    r = cf.dim
    if r > 4:
        raise BudgetError(f"exhaustive-small needs compressed dimension <= 4, got {r}")
    if r == 1:
        return _info(ops, np.eye(1)), np.eye(1, dtype=complex), (0,)
    if r == 2:
        th, ph = np.meshgrid(np.linspace(0, np.pi, grid), np.linspace(0, 2 * np.pi, 2 * grid - 1),
                             indexing="ij")
        pts = np.column_stack([th.ravel(), ph.ravel()])
        build = lambda x: _qubit_basis(x[0], x[1])
        us = _qubit_basis(pts[:, 0], pts[:, 1])
    else:
        m = r * r - 1
        sob = qmc.Sobol(m, scramble=True, seed=cfg.seed).random(samples)
        scale = np.array(([np.pi / 2, 2 * np.pi] * (r * (r - 1) // 2)) + [2 * np.pi] * (r - 1))
        pts = sob * scale
        build = lambda x: _givens_basis(x, r)
        us = np.array([build(x) for x in pts])
    vals = _batch_info(ops, us)
    best_val, best_u = -np.inf, None
    for idx in np.argsort(vals)[::-1][:polish]:
        res = minimize(lambda x: -_info(ops, build(x)), pts[idx], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000,
                                "maxfev": 40000})
        val = -res.fun
        if val > best_val:
            best_val, best_u = val, build(res.x)
    # coarse rank profiles of the best basis (set partitions of its columns)
    best_groups = tuple(range(r))
    for groups in _set_partitions(r):
        val = _info(ops, best_u, groups)
        if val > best_val + 1e-15:
            best_val, best_groups = val, tuple(groups)
    return best_val, best_u, best_groups


def _set_partitions(n):
    """Restricted-growth strings of length ``n``."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield list(prefix)
            return
        for b in range(top + 2):
            yield from rec(prefix + [b], max(top, b))
    yield from rec([0], 0)


def _check_system_observable(branches, obs: Observable):
    if obs.space != system_space(branches):
        raise SpaceMismatchError("observable must act on the system space (label 0)")


def max_info_fragment(branches: BranchDecomposition, a: Observable, fragment,
                      cfg: MeasurementSearchConfig = MeasurementSearchConfig()):
    """Largest ``I(A:X)`` found over measurements ``X`` on the fragment.

    Returns ``(value, FragmentMeasurement)``.  Every strategy yields a lower
    bound on the true maximum; ``branch-optimal`` measures the orthonormalised
    branch states, which is optimal when branches are perfectly correlated.
    """
    _check_system_observable(branches, a)
    cf = compress(branches, fragment)
    ops = cf.conditional_operators(list(a.projectors))
    groups = None
    if cfg.strategy == "branch-optimal" or not cf.members:
        u = np.eye(cf.dim, dtype=complex)
        val = _info(ops, u)
    elif cfg.strategy == "parametrized-search":
        val, u = _search(ops, cf, cfg)
    else:
        val, u, groups = _exhaustive(ops, cf, cfg)
    if groups is None:
        groups = tuple(range(cf.dim))
    meas = FragmentMeasurement(cf.members, u, groups, cfg.strategy, cf)
    return max(val, 0.0), meas


def entropy_of(branches: BranchDecomposition, b: Observable) -> float:
    """``H(B)`` on the reduced system state."""
    _check_system_observable(branches, b)
    rho = reduced_state_S(branches).matrix
    p = np.array([np.einsum("ij,ji->", P, rho).real for P in b.projectors])
    return entropy_unchecked(np.clip(p, 0, None))


# ---------------------------------------------------------------- redundancy


@dataclass(frozen=True, eq=False)
class RedundancyReport:
    """Outcome of a redundancy evaluation.

    ``partition`` lists the counted (qualifying) fragments; ``leftover`` holds
    environment positions outside every counted fragment.
    """

    observable: Observable
    delta: float
    i_hat_full: float
    partition: tuple
    fragment_infos: tuple
    r_delta: int
    optimizing_measurements: tuple
    strategy: str
    method: str
    leftover: tuple = ()
    no_information: bool = False


class _FragmentCache:
    """Memoises fragment information by the (rounded) decoherence factors it depends on."""

    def __init__(self, branches, obs, cfg):
        self.branches, self.obs, self.cfg = branches, obs, cfg
        self._store = {}
        self._sup = branches.support

    def key(self, members):
        b = self.branches
        g = gamma_matrix(b, members)[np.ix_(self._sup, self._sup)]
        gb = gamma_matrix(b, b.complement(members))[np.ix_(self._sup, self._sup)]
        dims = tuple(sorted(b.branch_states[k].shape[1] for k in members))
        return (np.round(g, 13).tobytes(), np.round(gb, 13).tobytes(), dims)

    def __call__(self, members):
        members = tuple(sorted(members))
        k = self.key(members)
        if k not in self._store:
            self._store[k] = max_info_fragment(self.branches, self.obs, members, self.cfg)
        val, meas = self._store[k]
        if meas.members != members:
            meas = FragmentMeasurement(members, meas.basis, meas.groups, meas.strategy,
                                       compress(self.branches, members))
        return val, meas


def is_symmetric(branches: BranchDecomposition, tol: float = 1e-12) -> bool:
    """All environment subsystems produce the same branch-overlap matrix."""
    ov = branches.overlaps
    return bool(np.max(np.abs(ov - ov[0])) <= tol) if len(ov) else True


def full_information(branches, obs, cfg) -> tuple:
    """``I_hat_E``: best of the branch measurement and a search on the whole environment."""
    everything = tuple(range(branches.env_count))
    strategy = cfg.strategy
    if strategy == "branch-optimal":
        strategy = "parametrized-search"
    if strategy == "exhaustive-small" and compress(branches, everything).dim > 4:
        strategy = "parametrized-search"
    return max_info_fragment(branches, obs, everything, cfg.with_strategy(strategy))


def redundancy(branches: BranchDecomposition, a: Observable, delta: float,
               cfg: MeasurementSearchConfig = MeasurementSearchConfig(), method: str = "auto",
               i_hat_full: float = None) -> RedundancyReport:
    """``R_delta(A)``: most disjoint fragments each holding ``(1 - delta) I_hat_E``.

    ``method`` is ``"exhaustive"`` (all set partitions, ``N <= 8``),
    ``"symmetric"`` (equal-size fragments; only valid when every subsystem
    couples identically), ``"greedy"``, or ``"auto"``.
    """
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta = {delta} outside [0, 1)")
    _check_system_observable(branches, a)
    n_env = branches.env_count
    if i_hat_full is None:
        i_hat_full, full_meas = full_information(branches, a, cfg)
    else:
        full_meas = None
    everything = tuple(range(n_env))
    if i_hat_full <= NO_INFO_TOL or n_env == 0:
        return RedundancyReport(a, delta, i_hat_full, (everything,), (i_hat_full,), 1,
                                (full_meas,), cfg.strategy, "none", (), True)
    threshold = (1.0 - delta) * i_hat_full
    evaluate = _FragmentCache(branches, a, cfg)

    def qualifies(members):
        if len(members) == n_env:
            return True, i_hat_full, full_meas
        val, meas = evaluate(members)
        return val >= threshold - QUALIFY_TOL, val, meas

    if method == "auto":
        if is_symmetric(branches):
            method = "symmetric"
        elif n_env <= EXACT_PARTITION_MAX:
            method = "exhaustive"
        else:
            method = "greedy"
    if method == "exhaustive":
        if n_env > EXACT_PARTITION_MAX:
            raise BudgetError(f"exhaustive partition search limited to N <= {EXACT_PARTITION_MAX}")
        blocks = _exhaustive_partition(n_env, qualifies)
    elif method == "symmetric":
        if not is_symmetric(branches):
            raise DomainError("symmetric shortcut requires identical subsystems")
        blocks = _symmetric_partition(n_env, qualifies)
    elif method == "greedy":
        blocks = _greedy_partition(branches, qualifies)
    else:
        raise DomainError(f"unknown method {method!r}")
    infos, meas = [], []
    for blk in blocks:
        _, val, m = qualifies(blk)
        infos.append(val)
        meas.append(m)
    used = set(itertools.chain.from_iterable(blocks))
    leftover = tuple(k for k in everything if k not in used)
    return RedundancyReport(a, delta, i_hat_full, tuple(blocks), tuple(infos), len(blocks),
                            tuple(meas), cfg.strategy, method, leftover, False)


def _members(mask: int) -> tuple:
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


def _exhaustive_partition(n_env, qualifies):
    qualify = np.zeros(1 << n_env, dtype=np.bool_)
    for mask in range(1, 1 << n_env):
        qualify[mask] = qualifies(_members(mask))[0]
    count, masks = kernels.best_partition(qualify, n_env)
    blocks = [_members(int(m)) for m in masks if qualify[int(m)]]
    return sorted(blocks)


def _symmetric_partition(n_env, qualifies):
    # only fragment size matters; pick the smallest qualifying size
    for m in range(1, n_env + 1):
        if qualifies(tuple(range(m)))[0]:
            r = n_env // m
            return [tuple(range(b * m, (b + 1) * m)) for b in range(r)]
    return [tuple(range(n_env))]


def _greedy_partition(branches, qualifies):
    """Grow fragments one subsystem at a time, then try to free subsystems by swaps."""
    n_env = branches.env_count
    sup = branches.support
    strength = []
    for k in range(n_env):
        g = np.abs(branches.overlaps[k][np.ix_(sup, sup)]).copy()
        np.fill_diagonal(g, 0.0)
        strength.append(g.max() if len(sup) > 1 else 0.0)
    remaining = sorted(range(n_env), key=lambda k: (strength[k], k))
    blocks = []
    while remaining:
        frag = []
        pool = list(remaining)
        ok = False
        while pool:
            frag.append(pool.pop(0))
            if qualifies(tuple(sorted(frag)))[0]:
                ok = True
                break
        if not ok:
            break
        for k in frag:
            remaining.remove(k)
        blocks.append(tuple(sorted(frag)))
    if not blocks:
        return [tuple(range(n_env))]
    # local refinement: drop members that are not needed, then retry leftovers
    changed = True
    while changed:
        changed = False
        for bi, blk in enumerate(blocks):
            for k in blk:
                smaller = tuple(x for x in blk if x != k)
                if smaller and qualifies(smaller)[0]:
                    blocks[bi] = smaller
                    remaining.append(k)
                    changed = True
                    break
        if remaining:
            cand = tuple(sorted(remaining))
            if qualifies(cand)[0]:
                blocks.append(cand)
                remaining = []
                changed = True
    return sorted(blocks)


# ---------------------------------------------------------------- pointer tools


def max_info_via_pointer(branches: BranchDecomposition, b: Observable, a_pointer: Observable,
                         fragment=None, threshold: float = 0.05) -> float:
    """``I(B:A)`` from measuring ``A`` then ``B`` on the reduced system state.

    In the perfectly correlated regime this equals the information about ``B``
    available in any fragment that leaves a record of ``A`` behind.  With
    ``fragment`` given, both the fragment and its complement must have
    decoherence factors below ``threshold``.
    """
    _check_system_observable(branches, b)
    _check_system_observable(branches, a_pointer)
    if fragment is not None:
        sup = branches.support
        members = branches.check_fragment(fragment)
        vals = []
        for part in (members, branches.complement(members)):
            g = np.abs(gamma_matrix(branches, part)[np.ix_(sup, sup)]).copy()
            np.fill_diagonal(g, 0.0)
            vals.append(float(g.max()) if len(sup) > 1 else 0.0)
        if max(vals) > threshold:
            raise RegimeError(f"not perfectly correlated: gamma_F={vals[0]:.3e}, "
                              f"gamma_Fbar={vals[1]:.3e}", vals[0], vals[1])
    rho_s = reduced_state_S(branches)
    return mutual_information(rho_s, b, a_pointer).mutual


@dataclass(frozen=True, eq=False)
class PointerDetection:
    observable: Observable
    index: int
    r_values: tuple
    i_hat_values: tuple
    no_redundancy: bool


def pointer_detect(branches: BranchDecomposition, candidates, delta: float,
                   cfg: MeasurementSearchConfig = MeasurementSearchConfig(),
                   method: str = "auto") -> PointerDetection:
    """Candidate with the largest ``R_delta``; ties go to larger ``I_hat_E``, then lower index."""
    candidates = list(candidates)
    if not candidates:
        raise DomainError("empty candidate grid")
    rs, ihs = [], []
    for c in candidates:
        rep = redundancy(branches, c, delta, cfg, method)
        rs.append(rep.r_delta)
        ihs.append(rep.i_hat_full)
    best = min(range(len(candidates)), key=lambda k: (-rs[k], -ihs[k], k))
    return PointerDetection(candidates[best], best, tuple(rs), tuple(ihs), max(rs) <= 1)


def bloch_grid(space: TensorSpace, label: int = 0, spacing_deg: float = 10.0):
    """Qubit axes on a ~``spacing_deg`` grid over the upper hemisphere.

    ``n`` and ``-n`` give the same projectors, so the equator keeps only
    azimuths in ``[0, 180)``.  Returns ``(observables, angles)`` with angles
    ``(theta, phi)`` in radians.
    """
    from .qstate import bloch_observable

    obs, angles = [], []
    n_rings = int(round(90.0 / spacing_deg))
    for ring in range(n_rings + 1):
        theta = np.deg2rad(ring * spacing_deg)
        if ring == 0:
            phis = [0.0]
        else:
            span = 180.0 if ring == n_rings else 360.0
            count = max(1, int(math.ceil(span * math.sin(theta) / spacing_deg)))
            phis = [np.deg2rad(span * q / count) for q in range(count)]
        for phi in phis:
            obs.append(bloch_observable(space, label, theta, phi))
            angles.append((float(theta), float(phi)))
    return obs, angles
