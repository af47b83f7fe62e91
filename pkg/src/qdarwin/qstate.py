"""Dense states, projector-valued observables and partial traces on labeled
tensor-product spaces.

Subsystems are identified by integer labels.  A :class:`TensorSpace` fixes an
ordering of labels; every matrix on the space uses row-major (Kronecker)
ordering of the subsystem factors in that order.  Observables keep their
projectors *locally* on the subsystems they act on and are embedded on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CommutatorError,
    DomainError,
    IncompleteMapError,
    InvalidObservableError,
    InvalidStateError,
    LabelCollisionError,
    NullConditioningError,
    SpaceMismatchError,
)

STATE_TOL = 1e-12
PROJECTOR_TOL = 1e-10
EIGEN_TOL = 1e-10
NULL_PROB = 1e-14
# eigenvalue positivity is only checked up to this dimension (O(d^3))
_EIGEN_CHECK_MAX_DIM = 2048


def _frozen(a, dtype=complex):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SubsystemLabel:
    index: int
    dimension: int

    def __post_init__(self):
        if self.dimension < 2:
            raise DomainError(f"subsystem {self.index} has dimension {self.dimension} < 2")
        if self.index < 0:
            raise DomainError(f"negative subsystem index {self.index}")


@dataclass(frozen=True)
class TensorSpace:
    subsystems: tuple

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        idx = [s.index for s in self.subsystems]
        if len(set(idx)) != len(idx):
            raise LabelCollisionError(f"duplicate subsystem labels in {idx}")
        if not idx:
            raise DomainError("a tensor space needs at least one subsystem")

    @classmethod
    def from_dims(cls, dims: Sequence[int], start: int = 0) -> "TensorSpace":
        return cls(tuple(SubsystemLabel(start + k, int(d)) for k, d in enumerate(dims)))

    @property
    def indices(self) -> tuple:
        return tuple(s.index for s in self.subsystems)

    @property
    def dims(self) -> tuple:
        return tuple(s.dimension for s in self.subsystems)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dims))

    def positions(self, labels: Iterable[int]) -> list:
        lookup = {s.index: k for k, s in enumerate(self.subsystems)}
        try:
            return [lookup[i] for i in labels]
        except KeyError as exc:
            raise SpaceMismatchError(f"label {exc.args[0]} not in space {self.indices}") from None

    def ordered(self, labels: Iterable[int]) -> tuple:
        """``labels`` sorted into this space's subsystem order."""
        labels = set(labels)
        self.positions(labels)
        return tuple(i for i in self.indices if i in labels)

    def subspace(self, labels: Iterable[int]) -> "TensorSpace":
        keep = set(labels)
        self.positions(keep)
        return TensorSpace(tuple(s for s in self.subsystems if s.index in keep))

    def dim_of(self, labels: Iterable[int]) -> int:
        pos = self.positions(labels)
        return int(np.prod([self.dims[p] for p in pos])) if pos else 1

    def is_disjoint(self, other: "TensorSpace") -> bool:
        return not set(self.indices) & set(other.indices)


@dataclass(frozen=True, eq=False)
class StateVector:
    space: TensorSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _frozen(self.amplitudes).reshape(-1)
        if amp.shape[0] != self.space.total_dimension:
            raise SpaceMismatchError(
                f"amplitude length {amp.shape[0]} != dimension {self.space.total_dimension}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > STATE_TOL:
            raise InvalidStateError(f"state norm {norm!r} deviates from 1")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, space: TensorSpace, amplitudes) -> "StateVector":
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(space, amp / np.linalg.norm(amp))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    space: TensorSpace
    matrix: np.ndarray
    check_positive: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dimension
        if m.shape != (d, d):
            raise SpaceMismatchError(f"matrix shape {m.shape} != ({d}, {d})")
        if np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STATE_TOL:
            raise InvalidStateError(f"density matrix trace {tr!r} deviates from 1")
        if self.check_positive and d <= _EIGEN_CHECK_MAX_DIM:
            lo = np.linalg.eigvalsh(m)[0]
            if lo < -EIGEN_TOL:
                raise InvalidStateError(f"density matrix has eigenvalue {lo!r} < 0")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        return state.to_density()

    @classmethod
    def hermitized(cls, space: TensorSpace, matrix, check_positive: bool = True):
        """Build from a matrix known to be Hermitian up to rounding."""
        m = np.asarray(matrix, dtype=complex)
        return cls(space, 0.5 * (m + m.conj().T), check_positive)


# ---------------------------------------------------------------- tensor helpers


def _embed_local(op: np.ndarray, dims: Sequence[int], pos: Sequence[int]) -> np.ndarray:
    """Embed ``op`` acting on factors ``pos`` of ``dims`` as identity elsewhere."""
    dims = list(dims)
    n = len(dims)
    rest = [k for k in range(n) if k not in pos]
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    order = list(pos) + rest
    shape = [dims[k] for k in order]
    t = full.reshape(shape + shape)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + k for k in inv])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def apply_left(op: np.ndarray, matrix: np.ndarray, dims: Sequence[int], pos: Sequence[int]):
    """``(op ⊗ I) @ matrix`` without forming ``op ⊗ I``."""
    dims = list(dims)
    D = matrix.shape[1]
    t = matrix.reshape(dims + [D])
    t = np.moveaxis(t, list(pos), list(range(len(pos))))
    moved_shape = t.shape
    dl = op.shape[0]
    t = (op @ t.reshape(dl, -1)).reshape(moved_shape)
    t = np.moveaxis(t, list(range(len(pos))), list(pos))
    return t.reshape(matrix.shape[0], D)


def apply_right(matrix: np.ndarray, op: np.ndarray, dims, pos):
    """``matrix @ (op ⊗ I)``."""
    return apply_left(op.conj().T, matrix.conj().T, dims, pos).conj().T


def sandwich(op: np.ndarray, matrix: np.ndarray, dims, pos):
    """``(op ⊗ I) matrix (op ⊗ I)^†``."""
    return apply_right(apply_left(op, matrix, dims, pos), op.conj().T, dims, pos)


def reduce_matrix(matrix: np.ndarray, dims: Sequence[int], keep_pos: Sequence[int]):
    """Partial trace of a dense matrix over every factor not in ``keep_pos``.

    Kept factors stay in ascending position order.
    """
    dims = list(dims)
    n = len(dims)
    keep_pos = sorted(keep_pos)
    if len(keep_pos) == n:
        return np.asarray(matrix)
    rest = [k for k in range(n) if k not in keep_pos]
    dk = int(np.prod([dims[k] for k in keep_pos]))
    dr = int(np.prod([dims[k] for k in rest]))
    t = np.asarray(matrix).reshape(dims + dims)
    order = keep_pos + rest
    t = t.transpose(order + [n + k for k in order]).reshape(dk, dr, dk, dr)
    return np.einsum("iaja->ij", t)


# ---------------------------------------------------------------- observables


@dataclass(frozen=True, eq=False)
class Observable:
    """A complete set of orthogonal projectors acting on ``acts_on``.

    ``projectors`` are local matrices on the ordered subsystems ``acts_on``;
    use :meth:`embedded` for the full-space operator.  ``keys`` are opaque
    outcome tags (e.g. ``(i, j)`` pairs produced by :func:`refine`).
    """

    space: TensorSpace
    acts_on: tuple
    projectors: tuple
    eigenvalues: tuple
    keys: tuple = None

    def __post_init__(self):
        acts = self.space.ordered(self.acts_on)
        if len(acts) != len(set(self.acts_on)) or not acts:
            raise InvalidObservableError(f"bad support {self.acts_on}")
        object.__setattr__(self, "acts_on", acts)
        d = self.space.dim_of(acts)
        projs = tuple(_frozen(p) for p in self.projectors)
        if not projs:
            raise InvalidObservableError("observable without projectors")
        for p in projs:
            if p.shape != (d, d):
                raise InvalidObservableError(f"projector shape {p.shape} != ({d}, {d})")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise InvalidObservableError("projector is not idempotent")
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise InvalidObservableError("projector is not Hermitian")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > PROJECTOR_TOL:
                    raise InvalidObservableError(f"projectors {i} and {j} are not orthogonal")
        if np.max(np.abs(sum(projs) - np.eye(d))) > PROJECTOR_TOL:
            raise InvalidObservableError("projectors do not sum to identity")
        eig = tuple(float(e) for e in self.eigenvalues)
        if len(eig) != len(projs):
            raise InvalidObservableError("one eigenvalue label per projector required")
        if len(set(eig)) != len(eig):
            raise InvalidObservableError(f"eigenvalue labels are not distinct: {eig}")
        keys = tuple(range(len(projs))) if self.keys is None else tuple(self.keys)
        if len(keys) != len(projs):
            raise InvalidObservableError("one key per projector required")
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "keys", keys)

    def __len__(self):
        return len(self.projectors)

    @property
    def positions(self) -> list:
        return self.space.positions(self.acts_on)

    @property
    def local_dim(self) -> int:
        return self.projectors[0].shape[0]

    def embedded(self, i: int) -> np.ndarray:
        return _embed_local(self.projectors[i], self.space.dims, self.positions)

    def local_operator(self) -> np.ndarray:
        return sum(e * p for e, p in zip(self.eigenvalues, self.projectors))

    @classmethod
    def from_projectors(cls, space, acts_on, projectors, eigenvalues=None, keys=None):
        if eigenvalues is None:
            eigenvalues = range(len(projectors))
        return cls(space, tuple(acts_on), tuple(projectors), tuple(eigenvalues), keys)

    @classmethod
    def from_basis(cls, space, acts_on, vectors, eigenvalues=None, groups=None):
        """Rank-one projectors on the columns of ``vectors``.

        ``groups`` optionally merges columns into higher-rank projectors.
        """
        v = np.asarray(vectors, dtype=complex)
        if groups is None:
            groups = list(range(v.shape[1]))
        labels = sorted(set(groups))
        projs = []
        for g in labels:
            cols = v[:, [k for k, gk in enumerate(groups) if gk == g]]
            projs.append(cols @ cols.conj().T)
        return cls.from_projectors(space, acts_on, projs, eigenvalues)

    @classmethod
    def from_hermitian(cls, space, acts_on, matrix, atol: float = 1e-9):
        """Spectral decomposition, merging eigenvalues closer than ``atol``."""
        m = np.asarray(matrix, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > PROJECTOR_TOL:
            raise InvalidObservableError("matrix is not Hermitian")
        w, v = np.linalg.eigh(m)
        groups, labels = [], []
        for k, val in enumerate(w):
            if labels and abs(val - labels[-1]) <= atol:
                groups.append(len(labels) - 1)
            else:
                labels.append(val)
                groups.append(len(labels) - 1)
        obs = cls.from_basis(space, acts_on, v, eigenvalues=labels, groups=groups)
        return obs

    @classmethod
    def identity(cls, space, acts_on):
        d = space.dim_of(acts_on)
        return cls.from_projectors(space, acts_on, [np.eye(d)], [1.0])

    @classmethod
    def computational(cls, space, acts_on, eigenvalues=None):
        d = space.dim_of(acts_on)
        return cls.from_basis(space, acts_on, np.eye(d), eigenvalues)


def bloch_observable(space: TensorSpace, label: int, theta: float, phi: float = 0.0) -> Observable:
    """Qubit observable ``n·σ`` with ``n`` at polar angle ``theta``, azimuth ``phi``.

    Outcome 0 is the +1 eigenvector (``|0⟩`` at ``theta = 0``).
    """
    up = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    down = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
    return Observable.from_basis(space, (label,), np.column_stack([up, down]), [1.0, -1.0])


# ---------------------------------------------------------------- operations


def tensor_product(states):
    """Kronecker product of states on disjoint spaces, in the given order.

    Accepts either all :class:`StateVector` or all :class:`DensityOperator`.
    """
    states = list(states)
    if not states:
        raise DomainError("tensor_product of an empty list")
    subsystems = []
    seen = set()
    for s in states:
        for lab in s.space.subsystems:
            if lab.index in seen:
                raise LabelCollisionError(f"subsystem label {lab.index} appears twice")
            seen.add(lab.index)
            subsystems.append(lab)
    space = TensorSpace(tuple(subsystems))
    if all(isinstance(s, StateVector) for s in states):
        amp = states[0].amplitudes
        for s in states[1:]:
            amp = np.kron(amp, s.amplitudes)
        # factors are normalised; renormalising only removes rounding drift
        return StateVector.normalized(space, amp)
    if all(isinstance(s, DensityOperator) for s in states):
        m = states[0].matrix
        for s in states[1:]:
            m = np.kron(m, s.matrix)
        return DensityOperator.hermitized(space, m)
    raise DomainError("cannot mix state vectors and density operators")


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    keep = set(keep)
    if not keep:
        raise DomainError("partial_trace needs a nonempty keep-set")
    pos = rho.space.positions(keep)
    reduced = reduce_matrix(rho.matrix, rho.space.dims, pos)
    return DensityOperator.hermitized(rho.space.subspace(keep), reduced)


def _check_space(rho, obs):
    if rho.space != obs.space:
        raise SpaceMismatchError(
            f"state space {rho.space.indices} != observable space {obs.space.indices}")


def clamp_probabilities(p: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """Clamp rounding negatives in ``[-tol, 0)`` to 0; raise below that."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol):
        raise DomainError(f"negative probability {p.min()!r} beyond rounding tolerance")
    return np.where(p < 0, 0.0, p)


def born_probabilities(rho: DensityOperator, obs: Observable) -> np.ndarray:
    """Outcome probabilities ``Tr(P_i rho)`` for each projector of ``obs``."""
    _check_space(rho, obs)
    local = reduce_matrix(rho.matrix, rho.space.dims, obs.positions)
    p = np.array([np.einsum("ij,ji->", P, local).real for P in obs.projectors])
    p = clamp_probabilities(p)
    if abs(p.sum() - 1.0) > PROJECTOR_TOL:
        raise InvalidStateError(f"probabilities sum to {p.sum()!r}")
    return p


def measure_unnormalized(matrix: np.ndarray, obs: Observable, outcome: int) -> np.ndarray:
    """``P rho P`` for projector ``outcome`` of ``obs`` (no normalisation)."""
    return sandwich(obs.projectors[outcome], matrix, obs.space.dims, obs.positions)


def conditional_state(rho: DensityOperator, obs: Observable, outcome: int) -> DensityOperator:
    """Post-measurement state ``P rho P / Tr(P rho P)`` (projection postulate)."""
    _check_space(rho, obs)
    m = measure_unnormalized(rho.matrix, obs, outcome)
    p = np.trace(m).real
    if p <= NULL_PROB:
        raise NullConditioningError(f"outcome {outcome} has probability {p!r}")
    return DensityOperator.hermitized(rho.space, m / p)


def coarse_grain(obs: Observable, outcome_map) -> Observable:
    """Merge outcomes: each group projector is the sum of its members.

    ``outcome_map`` maps every outcome index to a group index (mapping or
    sequence).  Groups are ordered by group index and labelled by it.
    """
    n = len(obs)
    if isinstance(outcome_map, Mapping):
        missing = [i for i in range(n) if i not in outcome_map]
        if missing or len(outcome_map) != n:
            raise IncompleteMapError(f"outcome map is not total on {n} outcomes (missing {missing})")
        groups = [outcome_map[i] for i in range(n)]
    else:
        groups = list(outcome_map)
        if len(groups) != n:
            raise IncompleteMapError(f"outcome map has {len(groups)} entries for {n} outcomes")
    labels = sorted(set(groups))
    projs = [sum(obs.projectors[i] for i in range(n) if groups[i] == g) for g in labels]
    return Observable.from_projectors(obs.space, obs.acts_on, projs, labels, keys=labels)


def _on_support(obs: Observable, acts_on: tuple) -> list:
    """Projectors of ``obs`` embedded on the (larger) local support ``acts_on``."""
    sub = obs.space.subspace(acts_on)
    pos = sub.positions(obs.acts_on)
    return [_embed_local(p, sub.dims, pos) for p in obs.projectors]


def max_commutator(b: Observable, c: Observable) -> float:
    """Largest Frobenius norm of ``[B_i, C_j]`` over all projector pairs."""
    if b.space != c.space:
        raise SpaceMismatchError("observables live on different spaces")
    acts = b.space.ordered(set(b.acts_on) | set(c.acts_on))
    bp, cp = _on_support(b, acts), _on_support(c, acts)
    return max(np.linalg.norm(x @ y - y @ x) for x in bp for y in cp)


def refine(b: Observable, c: Observable) -> Observable:
    """Common refinement with projectors ``B_i C_j`` (nonzero products only).

    Outcome keys are the pairs ``(i, j)``.
    """
    if b.space != c.space:
        raise SpaceMismatchError("observables live on different spaces")
    acts = b.space.ordered(set(b.acts_on) | set(c.acts_on))
    bp, cp = _on_support(b, acts), _on_support(c, acts)
    worst = max(np.linalg.norm(x @ y - y @ x) for x in bp for y in cp)
    if worst > PROJECTOR_TOL:
        raise CommutatorError(f"observables do not commute (max ‖[B_i,C_j]‖ = {worst:.3e})", worst)
    projs, keys = [], []
    for i, x in enumerate(bp):
        for j, y in enumerate(cp):
            prod = x @ y
            # a nonzero projector has Frobenius norm sqrt(rank) >= 1
            if np.linalg.norm(prod) > 0.5:
                projs.append(0.5 * (prod + prod.conj().T))
                keys.append((i, j))
    return Observable.from_projectors(b.space, acts, projs, range(len(projs)), keys)


def refinement_map(refined: Observable, axis: int) -> dict:
    """Outcome map recovering the ``axis``-th factor (0 for B, 1 for C) of a refinement."""
    return {k: key[axis] for k, key in enumerate(refined.keys)}
