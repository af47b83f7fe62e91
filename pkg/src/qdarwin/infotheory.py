"""Shannon quantities computed from projective-measurement statistics.

All logarithms are natural (nats).  Conditional quantities follow the
sequential recipe: measure ``x``, update the state by the projection
postulate, then measure ``a``.  Outcomes of ``x`` with probability at or below
``NULL_PROB`` carry no weight and are reported as null.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateObservableError, DomainError, OverlappingSupportError
from .qstate import (
    NULL_PROB,
    DensityOperator,
    Observable,
    _check_space,
    born_probabilities,
    clamp_probabilities,
    measure_unnormalized,
    reduce_matrix,
)

DIST_TOL = 1e-10


def as_distribution(p) -> np.ndarray:
    """Validate a probability vector (or table): nonnegative, unit total."""
    p = clamp_probabilities(np.asarray(p, dtype=float), DIST_TOL)
    if abs(p.sum() - 1.0) > DIST_TOL:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def _plogp(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log(p[mask])
    return out


def shannon_entropy(p) -> float:
    """H(p) = -sum p ln p, with 0 ln 0 = 0."""
    return float(-_plogp(as_distribution(p)).sum())


def entropy_unchecked(p) -> float:
    return float(-_plogp(p).sum())


def binary_entropy(q: float) -> float:
    return entropy_unchecked(np.array([q, 1.0 - q]))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint table ``p(A_i, X_j)`` (rows: first variable)."""

    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", as_distribution(self.table))

    @property
    def marginal_rows(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def marginal_cols(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def entropy(self) -> float:
        return entropy_unchecked(self.table)

    def mutual_information(self) -> float:
        return entropy_unchecked(self.marginal_rows) + entropy_unchecked(self.marginal_cols) \
            - self.entropy()


@dataclass(frozen=True)
class InfoReport:
    """Entropies (nats) for a pair of observables on one state.

    ``mutual`` is the asymmetric ``H(A) - H(A|X)``.  For observables on
    disjoint subsystems the symmetric-form fields are filled and
    ``mutual_symmetric`` equals ``mutual`` up to rounding; otherwise they are
    NaN.
    """

    h_a: float
    h_x: float
    h_joint: float
    h_a_given_x: float
    h_x_given_a: float
    mutual: float
    mutual_symmetric: float = float("nan")
    disjoint: bool = True
    null_outcomes: tuple = field(default=())


def sequential_joint(rho: DensityOperator, a: Observable, x: Observable) -> np.ndarray:
    """``J[i, j] = Tr(A_i X_j rho X_j)``: measure ``x`` first, then ``a``."""
    _check_space(rho, a)
    _check_space(rho, x)
    dims = rho.space.dims
    a_pos = a.positions
    table = np.empty((len(a), len(x)))
    for j in range(len(x)):
        post = measure_unnormalized(rho.matrix, x, j)
        local = reduce_matrix(post, dims, a_pos)
        table[:, j] = [np.einsum("ij,ji->", P, local).real for P in a.projectors]
    return clamp_probabilities(table)


def _conditional_columns(table: np.ndarray):
    px = table.sum(axis=0)
    null = px <= NULL_PROB
    if np.all(null):
        raise DegenerateObservableError("every outcome of the conditioning observable is null")
    cond = np.full(table.shape, np.nan)
    ok = ~null
    cond[:, ok] = table[:, ok] / px[ok]
    return cond, px, tuple(int(j) for j in np.flatnonzero(null))


def conditional_probability(rho: DensityOperator, a: Observable, x: Observable) -> np.ndarray:
    """Table ``p(A_i | X_j)``; columns of null ``X_j`` are NaN."""
    cond, _, _ = _conditional_columns(sequential_joint(rho, a, x))
    return cond


def conditional_entropy_from_table(cond: np.ndarray, weights: np.ndarray) -> float:
    """``sum_j w_j H(cond[:, j])`` skipping NaN (null) columns."""
    total = 0.0
    for j in range(cond.shape[1]):
        if np.isnan(cond[0, j]) or weights[j] <= NULL_PROB:
            continue
        total += weights[j] * entropy_unchecked(cond[:, j])
    return float(total)


def conditional_entropy(rho: DensityOperator, a: Observable, x: Observable) -> float:
    """H(A|X) = sum_j p(X_j) H(A|X_j)."""
    cond, px, _ = _conditional_columns(sequential_joint(rho, a, x))
    return conditional_entropy_from_table(cond, px)


def _disjoint(a: Observable, x: Observable) -> bool:
    return not set(a.acts_on) & set(x.acts_on)


def joint_distribution(rho: DensityOperator, a: Observable, x: Observable) -> JointDistribution:
    """Joint statistics of observables on disjoint subsystems."""
    if not _disjoint(a, x):
        raise OverlappingSupportError(
            f"supports {a.acts_on} and {x.acts_on} overlap; joint statistics are order dependent")
    return JointDistribution(sequential_joint(rho, a, x))


def mutual_information(rho: DensityOperator, a: Observable, x: Observable) -> InfoReport:
    h_a = shannon_entropy(born_probabilities(rho, a))
    table_xa = sequential_joint(rho, a, x)
    cond, px, null = _conditional_columns(table_xa)
    h_a_given_x = conditional_entropy_from_table(cond, px)
    mutual = h_a - h_a_given_x
    if not _disjoint(a, x):
        h_x = shannon_entropy(born_probabilities(rho, x))
        nan = float("nan")
        return InfoReport(h_a, h_x, nan, h_a_given_x, nan, mutual, nan, False, null)
    h_x = entropy_unchecked(px)
    h_joint = entropy_unchecked(table_xa)
    pa = table_xa.sum(axis=1)
    cond_ax = np.full(table_xa.T.shape, np.nan)
    ok = pa > NULL_PROB
    cond_ax[:, ok] = table_xa.T[:, ok] / pa[ok]
    h_x_given_a = conditional_entropy_from_table(cond_ax, pa)
    return InfoReport(h_a, h_x, h_joint, h_a_given_x, h_x_given_a, mutual,
                      h_a + h_x - h_joint, True, null)


def mutual_information_table(table) -> float:
    """Symmetric mutual information of a joint table (nats)."""
    return float(kernels.mutual_info_joint(np.ascontiguousarray(table, dtype=float)))


def sequential_chain_joint(rho: DensityOperator, observables, order=None) -> np.ndarray:
    """Joint outcome tensor of a sequence of projective measurements.

    ``observables`` index the axes of the returned tensor.  ``order`` is the
    sequence in which they are measured (default: listed order); each
    measurement updates the state by the projection postulate.
    """
    obs = list(observables)
    order = list(range(len(obs))) if order is None else list(order)
    if sorted(order) != list(range(len(obs))):
        raise DomainError(f"measurement order {order} is not a permutation")
    for o in obs:
        _check_space(rho, o)
    out = np.zeros([len(o) for o in obs])
    stack = [((), rho.matrix)]
    for step, k in enumerate(order):
        nxt = []
        for outcomes, m in stack:
            for i in range(len(obs[k])):
                post = measure_unnormalized(m, obs[k], i)
                if np.trace(post).real > NULL_PROB:
                    nxt.append((outcomes + (i,), post))
        stack = nxt
    for outcomes, m in stack:
        idx = [0] * len(obs)
        for k, i in zip(order, outcomes):
            idx[k] = i
        out[tuple(idx)] = max(np.trace(m).real, 0.0)
    return out


def markov_violation(joint: np.ndarray) -> float:
    """Max |p(v1..vn) - p(v1) prod_k p(v_{k+1} | v_k)| over a joint tensor."""
    n = joint.ndim
    axes = tuple(range(n))
    approx = joint.sum(axis=axes[1:])
    for k in range(n - 1):
        pair = joint.sum(axis=tuple(a for a in axes if a not in (k, k + 1)))
        prev = pair.sum(axis=1)
        trans = np.zeros_like(pair)
        ok = prev > NULL_PROB
        trans[ok] = pair[ok] / prev[ok, None]
        # approx[..., i] * trans[i, j] over the last axis
        approx = approx[..., :, None] * trans.reshape((1,) * k + trans.shape)
    return float(np.max(np.abs(approx - joint)))


def markov_check(rho: DensityOperator, chain, order=None) -> float:
    """Largest violation of the chain factorization of sequential statistics.

    ``chain`` lists the observables in Markov order; ``order`` (a permutation
    of chain positions) sets the physical measurement order, defaulting to
    the chain order.
    """
    return markov_violation(sequential_chain_joint(rho, chain, order))
