"""Pure-dephasing system-environment model.

The system couples to each environment subsystem through ``A ⊗ g_k Z_k``.
Starting from a product state the joint state stays a superposition of
*branches* ``|j> ⊗_k |phi_j^k>``, so every reduced quantity can be built from
single-subsystem branch states without materialising the global vector.

Labels: the system is subsystem 0, environment subsystem ``E_k`` (``k`` from
0) is subsystem ``k + 1``.  Fragments are sets of environment positions ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import kernels
from .errors import BudgetError, DegenerateBranchError, DomainError, GeneratorError
from .qstate import (
    STATE_TOL,
    DensityOperator,
    StateVector,
    SubsystemLabel,
    TensorSpace,
)

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
# dense matrices above this side length are refused
DENSE_BUDGET = 1 << 12
SUPPORT_TOL = 1e-14
GRAM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """System amplitudes, pointer eigenvalues and per-subsystem environment data.

    The generator of subsystem ``k`` is ``couplings[k] * env_generators[k]``.
    """

    system_amplitudes: np.ndarray
    system_eigenvalues: np.ndarray
    env_initial_states: tuple
    env_generators: tuple
    couplings: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        alpha = np.asarray(self.system_amplitudes, dtype=complex).reshape(-1)
        eig = np.asarray(self.system_eigenvalues, dtype=float).reshape(-1)
        if alpha.shape != eig.shape:
            raise DomainError("one eigenvalue per system amplitude required")
        if abs(np.sum(np.abs(alpha) ** 2) - 1.0) > STATE_TOL:
            raise DomainError("system amplitudes are not normalised")
        live = eig[np.abs(alpha) > 0]
        if len(set(live.tolist())) != len(live):
            raise DomainError("eigenvalues attached to nonzero amplitudes must be distinct")
        states = tuple(
            s.amplitudes if isinstance(s, StateVector) else np.asarray(s, dtype=complex)
            for s in self.env_initial_states)
        gens = tuple(np.asarray(z, dtype=complex) for z in self.env_generators)
        g = np.asarray(self.couplings, dtype=float).reshape(-1)
        if not (len(states) == len(gens) == len(g)):
            raise DomainError("env states, generators and couplings must have equal length")
        for k, (s, z) in enumerate(zip(states, gens)):
            if abs(np.linalg.norm(s) - 1.0) > STATE_TOL:
                raise DomainError(f"environment state {k} is not normalised")
            if z.shape != (s.shape[0], s.shape[0]):
                raise GeneratorError(f"generator {k} has shape {z.shape}")
            if np.max(np.abs(z - z.conj().T)) > 1e-12:
                raise GeneratorError(f"generator {k} is not Hermitian")
        for name, val in (("system_amplitudes", alpha), ("system_eigenvalues", eig),
                          ("couplings", g)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "env_initial_states", states)
        object.__setattr__(self, "env_generators", gens)
        object.__setattr__(self, "t", float(self.t))

    @property
    def system_dimension(self) -> int:
        return len(self.system_amplitudes)

    @property
    def env_count(self) -> int:
        return len(self.env_initial_states)

    @property
    def env_dims(self) -> tuple:
        return tuple(s.shape[0] for s in self.env_initial_states)

    def at_time(self, t: float) -> "ModelConfig":
        return ModelConfig(self.system_amplitudes, self.system_eigenvalues,
                           self.env_initial_states, self.env_generators, self.couplings, t)

    def space(self) -> TensorSpace:
        labels = [SubsystemLabel(0, self.system_dimension)]
        labels += [SubsystemLabel(k + 1, d) for k, d in enumerate(self.env_dims)]
        return TensorSpace(tuple(labels))


def default_model(n_env: int, t: float = 0.0, g=1.0, alpha=None, eigenvalues=(1.0, -1.0)):
    """System qubit with ``A = sigma_z``, env qubits in ``|+>`` with ``Z_k = g_k sigma_z``.

    Per-subsystem branch overlap is ``cos(2 g_k t)``.
    """
    if alpha is None:
        alpha = np.ones(2) / np.sqrt(2.0)
    g = np.broadcast_to(np.asarray(g, dtype=float), (n_env,))
    return ModelConfig(alpha, eigenvalues, tuple(PLUS for _ in range(n_env)),
                       tuple(SIGMA_Z for _ in range(n_env)), g, t)


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_model(n_env: int, t: float, rng: np.random.Generator, d_s: int = 2, d_e: int = 2,
                 random_alpha: bool = True, g=1.0) -> ModelConfig:
    """Random system amplitudes and Haar-random environment states.

    Draw order (fixed for reproducibility): system amplitudes, then one
    environment state per subsystem in order.  Generators are ``sigma_z``
    padded as ``diag(1, -1, 1, -1, ...)`` for ``d_e > 2``; system eigenvalues
    are ``d_s - 1 - 2 j`` (spaced by 2, centred on zero).
    """
    alpha = haar_state(d_s, rng) if random_alpha else np.ones(d_s) / np.sqrt(d_s)
    eig = np.arange(d_s, dtype=float)[::-1] * 2.0 - (d_s - 1)
    z = np.diag([(-1.0) ** k for k in range(d_e)]).astype(complex)
    states = tuple(haar_state(d_e, rng) for _ in range(n_env))
    g = np.broadcast_to(np.asarray(g, dtype=float), (n_env,))
    return ModelConfig(alpha, eig, states, tuple(z for _ in range(n_env)), g, t)


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    """``branch_states[k][j]`` is ``exp(-i t a_j g_k Z_k) |phi^k>``."""

    config: ModelConfig
    amplitudes: np.ndarray
    branch_states: tuple
    overlaps: np.ndarray = field(repr=False)

    @property
    def n_branches(self) -> int:
        return len(self.amplitudes)

    @property
    def env_count(self) -> int:
        return len(self.branch_states)

    @property
    def support(self) -> np.ndarray:
        """Branch indices with nonzero amplitude."""
        return np.flatnonzero(np.abs(self.amplitudes) > SUPPORT_TOL)

    def check_fragment(self, fragment) -> tuple:
        members = tuple(sorted(set(int(k) for k in fragment)))
        bad = [k for k in members if not 0 <= k < self.env_count]
        if bad:
            raise DomainError(f"fragment members {bad} are not environment positions")
        return members

    def complement(self, fragment) -> tuple:
        members = set(self.check_fragment(fragment))
        return tuple(k for k in range(self.env_count) if k not in members)

    def fragment_vectors(self, fragment) -> np.ndarray:
        """Rows ``|Phi_j^F>`` (Kronecker over members in ascending order)."""
        members = self.check_fragment(fragment)
        dim = int(np.prod([self.branch_states[k].shape[1] for k in members])) if members else 1
        if dim > DENSE_BUDGET:
            raise BudgetError(f"fragment dimension {dim} exceeds budget {DENSE_BUDGET}")
        out = np.ones((self.n_branches, 1), dtype=complex)
        for k in members:
            b = self.branch_states[k]
            out = (out[:, :, None] * b[:, None, :]).reshape(self.n_branches, -1)
        return out


def evolve(config: ModelConfig) -> BranchDecomposition:
    """Branch states after time ``config.t`` (one diagonalisation per subsystem)."""
    a = config.system_eigenvalues
    branch_states = []
    overlaps = np.empty((config.env_count, len(a), len(a)), dtype=complex)
    for k, (phi, z, g) in enumerate(zip(config.env_initial_states, config.env_generators,
                                        config.couplings)):
        w, v = np.linalg.eigh(g * z)
        coeff = v.conj().T @ phi
        phases = np.exp(-1j * config.t * np.outer(a, w))
        b = (phases * coeff[None, :]) @ v.T
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        b.setflags(write=False)
        branch_states.append(b)
        # overlaps[k, i, j] = <phi_j | phi_i>
        overlaps[k] = b @ b.conj().T
    amps = config.system_amplitudes
    return BranchDecomposition(config, amps, tuple(branch_states), overlaps)


@dataclass(frozen=True, eq=False)
class DecoherenceFactors:
    fragment: tuple
    gamma: np.ndarray
    gamma_max: float


def _gamma_max(gamma: np.ndarray, support) -> float:
    sub = np.abs(gamma[np.ix_(support, support)])
    if len(support) < 2:
        return 0.0
    np.fill_diagonal(sub, 0.0)
    return float(sub.max())


def gamma_matrix(branches: BranchDecomposition, fragment) -> np.ndarray:
    members = branches.check_fragment(fragment)
    if not members:
        return np.ones((branches.n_branches,) * 2, dtype=complex)
    return np.prod(branches.overlaps[list(members)], axis=0)


def decoherence_factors(branches: BranchDecomposition, fragment) -> DecoherenceFactors:
    """``gamma_ij = prod_{k in F} <phi_j^k | phi_i^k>``.

    ``gamma_max`` ranges over distinct pairs of branches with nonzero
    amplitude.
    """
    members = branches.check_fragment(fragment)
    gamma = gamma_matrix(branches, members)
    return DecoherenceFactors(members, gamma, _gamma_max(gamma, branches.support))


def all_subset_gammas(branches: BranchDecomposition) -> np.ndarray:
    """Decoherence factors for every subset, indexed by bitmask over env positions."""
    return kernels.subset_gammas(np.ascontiguousarray(branches.overlaps))


def sf_space(branches: BranchDecomposition, fragment) -> TensorSpace:
    members = branches.check_fragment(fragment)
    labels = [SubsystemLabel(0, branches.n_branches)]
    labels += [SubsystemLabel(k + 1, branches.branch_states[k].shape[1]) for k in members]
    return TensorSpace(tuple(labels))


def reduced_state_SF(branches: BranchDecomposition, fragment) -> DensityOperator:
    """State of the system and fragment ``F`` from the branch formula."""
    members = branches.check_fragment(fragment)
    phi = branches.fragment_vectors(members)
    d = branches.n_branches * phi.shape[1]
    if d > DENSE_BUDGET:
        raise BudgetError(f"dimension {d} exceeds dense budget {DENSE_BUDGET}")
    gbar = gamma_matrix(branches, branches.complement(members))
    m = branches.amplitudes[:, None] * phi
    rho = np.einsum("ia,jb,ij->iajb", m, m.conj(), gbar).reshape(d, d)
    return DensityOperator.hermitized(sf_space(branches, members), rho)


def reduced_state_S(branches: BranchDecomposition) -> DensityOperator:
    a = branches.amplitudes
    gamma = gamma_matrix(branches, range(branches.env_count))
    rho = np.outer(a, a.conj()) * gamma
    space = TensorSpace((SubsystemLabel(0, branches.n_branches),))
    return DensityOperator.hermitized(space, rho)


def full_state(branches: BranchDecomposition) -> StateVector:
    """Global state assembled from the branches (used as a cross-check)."""
    phi = branches.fragment_vectors(range(branches.env_count))
    amp = (branches.amplitudes[:, None] * phi).reshape(-1)
    return StateVector.normalized(branches.config.space(), amp)


def brute_force_state(config: ModelConfig) -> StateVector:
    """Global state from ``exp(-i H t)`` applied to the initial product state.

    ``H = sum_k A ⊗ g_k Z_k`` is assembled as a sparse operator on the full
    space; this path never uses the branch decomposition.
    """
    a_op = sp.diags(config.system_eigenvalues.astype(complex))
    dims = (config.system_dimension,) + config.env_dims
    total = int(np.prod(dims))
    if total > 1 << 16:
        raise BudgetError(f"global dimension {total} too large for brute force")
    h = sp.csr_matrix((total, total), dtype=complex)
    for k, (z, g) in enumerate(zip(config.env_generators, config.couplings)):
        left = int(np.prod(config.env_dims[:k])) if k else 1
        right = int(np.prod(config.env_dims[k + 1:])) if k + 1 < config.env_count else 1
        term = sp.kron(a_op, sp.kron(sp.identity(left), sp.kron(sp.csr_matrix(g * z),
                                                                   sp.identity(right))))
        h = h + term
    psi0 = np.asarray(config.system_amplitudes, dtype=complex)
    for s in config.env_initial_states:
        psi0 = np.kron(psi0, s)
    psi = expm_multiply(-1j * config.t * h.tocsc(), psi0) if config.t != 0 else psi0
    return StateVector.normalized(config.space(), psi)


# ---------------------------------------------------------------- ideal state


@dataclass(frozen=True, eq=False)
class IdealState:
    """Perfectly correlated state built from orthonormalised branch states."""

    sigma: DensityOperator
    ortho_branches: np.ndarray
    support: np.ndarray
    fragment: tuple


def gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Classical Gram-Schmidt on the rows of ``vectors`` in row order.

    ``Psi_i = (Phi_i - sum_{j<i} <Psi_j|Phi_i> Psi_j) / N_i``.
    """
    out = np.zeros_like(vectors, dtype=complex)
    for i, phi in enumerate(vectors):
        r = phi.astype(complex).copy()
        for j in range(i):
            r -= np.vdot(out[j], phi) * out[j]
        norm = np.linalg.norm(r)
        if norm <= 0:
            raise DegenerateBranchError(f"branch {i} lies in the span of earlier branches")
        out[i] = r / norm
    return out


def gram_schmidt_ideal(branches: BranchDecomposition, fragment) -> IdealState:
    members = branches.check_fragment(fragment)
    support = branches.support
    phi = branches.fragment_vectors(members)[support]
    gram = phi.conj() @ phi.T
    lo = np.linalg.eigvalsh(gram)[0]
    if lo <= GRAM_TOL:
        raise DegenerateBranchError(f"branch states are linearly dependent (min Gram eig {lo:.3e})")
    psi = gram_schmidt(phi)
    n, df = branches.n_branches, phi.shape[1]
    d = n * df
    if d > DENSE_BUDGET:
        raise BudgetError(f"dimension {d} exceeds dense budget {DENSE_BUDGET}")
    sigma = np.zeros((n, df, n, df), dtype=complex)
    weights = np.abs(branches.amplitudes[support]) ** 2
    for w, i, v in zip(weights, support, psi):
        sigma[i, :, i, :] = w * np.outer(v, v.conj())
    rho = DensityOperator.hermitized(sf_space(branches, members), sigma.reshape(d, d))
    psi.setflags(write=False)
    return IdealState(rho, psi, support, members)


def gs_overlap_table(branches: BranchDecomposition, ideal: IdealState) -> np.ndarray:
    """``|<Phi_j | Psi_i>|`` indexed ``[j, i]`` over the support branches."""
    phi = branches.fragment_vectors(ideal.fragment)[ideal.support]
    return np.abs(phi.conj() @ ideal.ortho_branches.T)


def euclidean_bound(d_s: int, gamma_f: float, gamma_fbar: float) -> float:
    """Leading-order bound on ``||rho - sigma||_2`` for the Gram-Schmidt ideal state."""
    return float(np.sqrt(2.0 * (d_s - 1) * gamma_f ** 2 + gamma_fbar ** 2))


def perturbation_budget(d_s: int, gamma_f: float, gamma_fbar: float) -> float:
    """Bound on ``|I_rho - I_sigma|``: ``-3 f ln(f / d_s)`` (nats).

    ``f = sqrt(d_s (2 (d_s - 1) gamma_f^2 + gamma_fbar^2))``.
    """
    f = np.sqrt(d_s * (2.0 * (d_s - 1) * gamma_f ** 2 + gamma_fbar ** 2))
    if f == 0.0:
        return 0.0
    return float(-3.0 * f * np.log(f / d_s))


def budget_parameter(d_s: int, gamma_f: float, gamma_fbar: float) -> float:
    return float(np.sqrt(d_s * (2.0 * (d_s - 1) * gamma_f ** 2 + gamma_fbar ** 2)))


def overlap_time(c: float, g: float = 1.0) -> float:
    """Time at which the default model's per-qubit overlap ``cos(2 g t)`` equals ``c``."""
    if not -1.0 <= c <= 1.0:
        raise DomainError(f"overlap {c} outside [-1, 1]")
    return float(np.arccos(c) / (2.0 * g))


def fragment_gamma_max(branches: BranchDecomposition, fragment) -> tuple:
    """``(gamma_F, gamma_Fbar)`` maxima for a fragment and its complement."""
    f = decoherence_factors(branches, fragment).gamma_max
    fb = decoherence_factors(branches, branches.complement(fragment)).gamma_max
    return f, fb


def env_positions(branches: BranchDecomposition) -> Sequence[int]:
    return range(branches.env_count)
