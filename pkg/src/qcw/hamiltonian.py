"""Local Hamiltonians as layered sums of tensor-product terms.

A :class:`LocalTerm` is ``coefficient * (F_1 ⊗ F_2 ⊗ ...)`` with pairwise
disjoint factor supports.  A :class:`LayeredHamiltonian` groups terms into
layers that are each expected to commute internally; the grouping only
affects the static checks, never the energy.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapError, InputError
from .qstate import ATOL, OperatorFactor, StateVector, apply_matrix, embed_matrix

COMMUTATOR_CAP = 12
DENSE_CAP = 12
PSD_TOL = 1e-10

__all__ = [
    "LocalTerm",
    "LayeredHamiltonian",
    "TwoLayerInstance",
    "TermCertificate",
    "LayerReport",
    "DegreeProfile",
    "commutator_norm",
    "check_layered",
    "check_psd",
    "degree_profile",
    "energy",
    "matvec",
    "to_dense",
]


@dataclass(frozen=True)
class TermCertificate:
    psd: bool
    norm: float
    min_eigenvalue: float | None
    method: str

    @property
    def ok(self) -> bool:
        return self.psd and self.norm <= 1.0 + ATOL


@dataclass(frozen=True)
class LocalTerm:
    factors: tuple[OperatorFactor, ...]
    coefficient: float = 1.0

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise InputError("a term needs at least one factor")
        seen: set[int] = set()
        for f in factors:
            if seen.intersection(f.support):
                raise InputError("factor supports within a term must be disjoint")
            seen.update(f.support)
            if not f.hermitian and np.max(np.abs(f.matrix - f.matrix.conj().T)) > ATOL:
                raise InputError(f"factor on {f.support} is not Hermitian")
        if not np.isfinite(self.coefficient) or self.coefficient < 0:
            raise InputError(f"coefficient must be a nonnegative real, got {self.coefficient}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @cached_property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(q for f in self.factors for q in f.support))

    @property
    def locality(self) -> int:
        return len(self.support)

    @cached_property
    def nontrivial_support(self) -> tuple[int, ...]:
        qs = []
        for f in self.factors:
            qs.extend(q for q in f.support if not f.acts_trivially_on(q))
        return tuple(sorted(qs))

    def scaled(self, factor: float) -> "LocalTerm":
        return LocalTerm(self.factors, self.coefficient * factor)

    def apply(self, amps: np.ndarray, n: int) -> np.ndarray:
        out = amps
        for f in self.factors:
            out = apply_matrix(out, f.matrix, f.support, n)
        return self.coefficient * out

    def dense(self, cap: int = COMMUTATOR_CAP) -> np.ndarray:
        """Matrix of the term on its own support (coefficient included)."""
        if self.locality > cap:
            raise CapError(f"term support of {self.locality} qubits exceeds cap {cap}")
        mat = np.eye(2**self.locality, dtype=complex)
        for f in self.factors:
            mat = embed_matrix(f.matrix, f.support, self.support) @ mat
        return self.coefficient * mat

    def norm_bound(self) -> float:
        return self.coefficient * float(np.prod([f.spectral_norm() for f in self.factors]))

    def certify(self, cap: int = COMMUTATOR_CAP) -> TermCertificate:
        """PSD and norm check, per factor when possible, otherwise on the dense term."""
        norm = self.norm_bound()
        mins = [f.min_eigenvalue() for f in self.factors]
        if all(m >= -PSD_TOL for m in mins) or self.coefficient == 0.0:
            return TermCertificate(True, norm, None, "factor")
        lam = float(np.linalg.eigvalsh(self.dense(cap))[0])
        return TermCertificate(lam >= -PSD_TOL, norm, lam, "dense")


@dataclass(frozen=True)
class DegreeProfile:
    degrees: tuple[int, ...]
    k: int
    l: int
    term_supports: tuple[tuple[int, ...], ...]

    def position(self, term_index: int, qubit: int) -> int:
        """1-based rank of ``term_index`` among the terms acting nontrivially on ``qubit``."""
        rank = 0
        for i, supp in enumerate(self.term_supports):
            if qubit in supp:
                rank += 1
                if i == term_index:
                    return rank
        raise InputError(f"term {term_index} does not act on qubit {qubit}")


@dataclass(frozen=True)
class LayeredHamiltonian:
    num_qubits: int
    layers: tuple[tuple[LocalTerm, ...], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        if self.num_qubits < 1:
            raise InputError("register must hold at least one qubit")
        for layer in layers:
            for t in layer:
                if t.support and t.support[-1] >= self.num_qubits:
                    raise InputError(f"term support {t.support} out of range for {self.num_qubits} qubits")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def single_layer(cls, n: int, terms: Iterable[LocalTerm], **metadata) -> "LayeredHamiltonian":
        return cls(n, (tuple(terms),), dict(metadata))

    @classmethod
    def unlayered(cls, n: int, terms: Iterable[LocalTerm], **metadata) -> "LayeredHamiltonian":
        """One term per layer; for general (non-commuting) Hamiltonians."""
        return cls(n, tuple((t,) for t in terms), dict(metadata))

    @property
    def terms(self) -> tuple[LocalTerm, ...]:
        return tuple(t for layer in self.layers for t in layer)

    def apply(self, amps: np.ndarray) -> np.ndarray:
        out = np.zeros_like(amps, dtype=complex)
        for t in self.terms:
            out += t.apply(amps, self.num_qubits)
        return out

    def expectation(self, amps: np.ndarray) -> float:
        total = 0.0
        for t in self.terms:
            total += float(np.vdot(amps, t.apply(amps, self.num_qubits)).real)
        return total

    def merged(self) -> "LayeredHamiltonian":
        return LayeredHamiltonian(self.num_qubits, (self.terms,), dict(self.metadata))

    def padded(self, n: int) -> "LayeredHamiltonian":
        """Same terms on a larger register."""
        if n < self.num_qubits:
            raise InputError("cannot shrink a register")
        return LayeredHamiltonian(n, self.layers, dict(self.metadata))


# ---------------------------------------------------------------------------
# commutation


def _blocks(t1: LocalTerm, t2: LocalTerm) -> list[tuple[list[OperatorFactor], list[OperatorFactor]]]:
    """Group the factors of both terms into connected components of overlapping support."""
    items = [(0, f) for f in t1.factors] + [(1, f) for f in t2.factors]
    parent = list(range(len(items)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(items)), 2):
        if set(items[i][1].support) & set(items[j][1].support):
            parent[find(i)] = find(j)
    groups: dict[int, tuple[list, list]] = {}
    for i, (which, f) in enumerate(items):
        groups.setdefault(find(i), ([], []))[which].append(f)
    return list(groups.values())


def _block_matrix(factors: Sequence[OperatorFactor], support: Sequence[int]) -> np.ndarray:
    mat = np.eye(2 ** len(support), dtype=complex)
    for f in factors:
        mat = embed_matrix(f.matrix, f.support, support) @ mat
    return mat


def commutator_norm(t1: LocalTerm, t2: LocalTerm, cap: int = COMMUTATOR_CAP) -> float:
    """Operator norm of ``[T1, T2]``.

    The terms are split into blocks of overlapping factors.  Blocks whose two
    restrictions commute (to 1e-14) contribute the scalar ``||X Y||``; the
    remaining blocks are densified together on their joint support, which must
    not exceed ``cap`` qubits.
    """
    if not set(t1.support) & set(t2.support):
        return 0.0
    if t1.coefficient == 0.0 or t2.coefficient == 0.0:
        return 0.0
    scale = t1.coefficient * t2.coefficient
    noncommuting = []
    width = 0
    for f1, f2 in _blocks(t1, t2):
        if not f1 or not f2:
            scale *= float(np.prod([f.spectral_norm() for f in f1 + f2]))
            continue
        support = sorted({q for f in f1 + f2 for q in f.support})
        if len(support) > cap:
            raise CapError(f"commutator block of {len(support)} qubits exceeds cap {cap}")
        x = _block_matrix(f1, support)
        y = _block_matrix(f2, support)
        xy, yx = x @ y, y @ x
        if np.max(np.abs(xy - yx)) <= 1e-14:
            scale *= float(np.linalg.norm(xy, 2))
        else:
            noncommuting.append((xy, yx))
            width += len(support)
        if scale == 0.0:
            return 0.0
    if not noncommuting:
        return 0.0
    if width > cap:
        raise CapError(f"commutator support of {width} qubits exceeds cap {cap}")
    p = np.ones((1, 1), dtype=complex)
    q = np.ones((1, 1), dtype=complex)
    for xy, yx in noncommuting:
        p = np.kron(xy, p)
        q = np.kron(yx, q)
    return scale * float(np.linalg.norm(p - q, 2))


@dataclass(frozen=True)
class LayerReport:
    ok: bool
    worst_pair: tuple[int, int, int] | None  # (layer, i, j)
    worst_norm: float
    pairs_checked: int


def check_layered(H: LayeredHamiltonian, atol: float = ATOL, cap: int = COMMUTATOR_CAP) -> LayerReport:
    worst, worst_pair, checked = 0.0, None, 0
    for li, layer in enumerate(H.layers):
        for i, j in itertools.combinations(range(len(layer)), 2):
            if not set(layer[i].support) & set(layer[j].support):
                continue
            checked += 1
            c = commutator_norm(layer[i], layer[j], cap)
            if worst_pair is None or c > worst:
                worst, worst_pair = c, (li, i, j)
    return LayerReport(worst <= atol, worst_pair, worst, checked)


def check_psd(H: LayeredHamiltonian, cap: int = COMMUTATOR_CAP) -> list[tuple[int, TermCertificate]]:
    """Certificates for every term (index in flattened order) failing PSD or norm <= 1."""
    return [(i, c) for i, t in enumerate(H.terms) if not (c := t.certify(cap)).ok]


def degree_profile(H: LayeredHamiltonian) -> DegreeProfile:
    supports = tuple(t.nontrivial_support for t in H.terms)
    degrees = [0] * H.num_qubits
    for supp in supports:
        for q in supp:
            degrees[q] += 1
    k = max((len(s) for s in supports), default=0)
    return DegreeProfile(tuple(degrees), k, max(degrees, default=0), supports)


# ---------------------------------------------------------------------------
# values


def _amps(H: LayeredHamiltonian, psi: StateVector) -> np.ndarray:
    if psi.num_qubits != H.num_qubits:
        raise InputError(f"state has {psi.num_qubits} qubits, Hamiltonian {H.num_qubits}")
    return psi.amplitudes


def energy(H: LayeredHamiltonian, psi: StateVector) -> float:
    """``<psi|H|psi>``, accumulated term by term in index order."""
    return H.expectation(_amps(H, psi))


def matvec(H: LayeredHamiltonian, psi: StateVector) -> StateVector:
    return StateVector(H.num_qubits, H.apply(_amps(H, psi)))


def to_dense(H: LayeredHamiltonian, cap: int = DENSE_CAP) -> np.ndarray:
    if H.num_qubits > cap:
        raise CapError(f"{H.num_qubits} qubits exceeds the dense cap of {cap}")
    return H.apply(np.eye(2**H.num_qubits, dtype=complex))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoLayerInstance:
    """``A`` and ``B``, each a single commuting layer with ``0 <= A, B <= I``."""

    A: LayeredHamiltonian
    B: LayeredHamiltonian
    alpha: float
    beta: float
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.A.num_qubits != self.B.num_qubits:
            raise InputError("A and B must act on the same register")
        if len(self.A.layers) != 1 or len(self.B.layers) != 1:
            raise InputError("A and B must each be a single layer")
        if not 0.0 <= self.alpha < self.beta:
            raise InputError(f"need 0 <= alpha < beta, got alpha={self.alpha}, beta={self.beta}")

    @property
    def num_qubits(self) -> int:
        return self.A.num_qubits

    def validate(self, spectral_cap: int = 10) -> dict:
        """Layering checks, plus spectral bounds on A and B when small enough to densify."""
        report = {"A_commuting": check_layered(self.A).ok, "B_commuting": check_layered(self.B).ok}
        if self.num_qubits <= spectral_cap:
            for name, h in (("A", self.A), ("B", self.B)):
                ev = np.linalg.eigvalsh(to_dense(h))
                report[f"{name}_spectrum"] = (float(ev[0]), float(ev[-1]))
                report[f"{name}_bounded"] = bool(ev[0] >= -PSD_TOL and ev[-1] <= 1.0 + PSD_TOL)
        return report
