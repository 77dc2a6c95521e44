"""Instance compilers.

* :func:`kitaev_54` -- SWAP-normalized circuit -> clock Hamiltonian (unary clock).
* :func:`layer_54` -- general local Hamiltonian -> two commuting layers ``(A, B)``.
* :func:`two_layer_to_cgscon` -- ``(A, B)`` -> commuting connectivity instance
  ``H = A⊗Π⊗P+ + B⊗Π⊗P- + I⊗I⊗Π`` on ``n + 6`` qubits.

plus the history-state and completeness-path builders.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuits import Circuit, Gate, X, inverse, relabel_state, run_gates
from .errors import InputError, LayoutError
from .hamiltonian import (
    LayeredHamiltonian,
    LocalTerm,
    TwoLayerInstance,
    check_layered,
    degree_profile,
)
from .qstate import OperatorFactor, StateVector, embed_matrix

__all__ = [
    "P0",
    "P1",
    "PI",
    "PPLUS",
    "PMINUS",
    "P01",
    "P10",
    "ClockHamiltonian",
    "RegisterLayout",
    "CgsconInstance",
    "TraversalPath",
    "LayeringData",
    "PromiseGapWarning",
    "kitaev_54",
    "history_state",
    "layer_terms",
    "layer_54",
    "gamma_extend",
    "soundness_threshold",
    "two_layer_to_cgscon",
    "completeness_path",
]


def _ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


_e000, _e111 = _ket(0, 8), _ket(7, 8)
P0 = np.outer(_e000, _e000)
P1 = np.outer(_e111, _e111)
PI = np.eye(8) - P0 - P1
PPLUS = 0.5 * np.outer(_e000 + _e111, _e000 + _e111)
PMINUS = 0.5 * np.outer(_e000 - _e111, _e000 - _e111)
P01 = np.outer(_e000, _e111)
P10 = np.outer(_e111, _e000)

_PROJ0 = np.diag([1.0, 0.0]).astype(complex)
_PROJ1 = np.diag([0.0, 1.0]).astype(complex)


class PromiseGapWarning(UserWarning):
    """Emitted when a compiled instance has ``c >= s``."""


# ---------------------------------------------------------------------------
# circuit -> clock Hamiltonian


@dataclass(frozen=True)
class ClockHamiltonian:
    hamiltonian: LayeredHamiltonian
    circuit: Circuit
    output_qubit: int
    witness_qubits: tuple[int, ...]
    clock_qubits: tuple[int, ...]
    scale: float
    families: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> int:
        return len(self.circuit)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.circuit.num_qubits))

    @property
    def num_qubits(self) -> int:
        return self.hamiltonian.num_qubits


def _propagation_matrix(gate: Gate, clocks: Sequence[int], before: Sequence[int], after: Sequence[int]):
    """``½(I⊗(|a><a| + |b><b|) - U⊗|b><a| - U†⊗|a><b|)`` on gate qubits + ``clocks``."""
    kc = len(clocks)
    a = sum(bit << i for i, bit in enumerate(before))
    b = sum(bit << i for i, bit in enumerate(after))
    ka, kb = _ket(a, 2**kc), _ket(b, 2**kc)
    u = gate.unitary
    eye_u = np.eye(u.shape[0])
    mat = 0.5 * (
        np.kron(np.outer(ka, ka) + np.outer(kb, kb), eye_u)
        - np.kron(np.outer(kb, ka), u)
        - np.kron(np.outer(ka, kb), u.conj().T)
    )
    order = list(gate.support) + list(clocks)
    support = sorted(order)
    return tuple(support), embed_matrix(mat, order, support)


def kitaev_54(
    c: Circuit,
    witness_qubits: Iterable[int] = (),
    output_qubit: int | None = 0,
    budget: int = 3,
) -> ClockHamiltonian:
    """Unary-clock circuit Hamiltonian.

    Clock wires ``c_1..c_m`` follow the data wires.  All terms get the common
    coefficient ``1/(m+1)``.
    """
    if output_qubit is None:
        raise InputError("an output qubit must be designated")
    n, m = c.num_qubits, len(c)
    if not 0 <= output_qubit < n:
        raise InputError(f"output qubit {output_qubit} out of range")
    witness = tuple(sorted(set(int(q) for q in witness_qubits)))
    if any(not 0 <= q < n for q in witness):
        raise InputError("witness qubit out of range")
    counts = c.gate_counts()
    if max(counts, default=0) > budget:
        raise InputError(f"circuit is not SWAP-normalized: per-wire gate counts {counts} exceed {budget}")
    if m < 1:
        raise InputError("circuit must contain at least one gate")

    clock = tuple(range(n, n + m))  # clock[t-1] is c_t
    scale = 1.0 / (m + 1)
    proj = lambda q, p: OperatorFactor((q,), p, hermitian=True)  # noqa: E731
    terms: list[LocalTerm] = []
    families = {"input": 0, "output": 0, "propagation": 0, "clock": 0}

    for j in range(n):
        if j not in witness:
            terms.append(LocalTerm((proj(j, _PROJ1), proj(clock[0], _PROJ0)), scale))
            families["input"] += 1
    terms.append(LocalTerm((proj(output_qubit, _PROJ0), proj(clock[-1], _PROJ1)), scale))
    families["output"] += 1
    for t, gate in enumerate(c.gates, start=1):
        clocks, before, after = [], [], []
        if t > 1:
            clocks.append(clock[t - 2]); before.append(1); after.append(1)  # noqa: E702
        clocks.append(clock[t - 1]); before.append(0); after.append(1)  # noqa: E702
        if t < m:
            clocks.append(clock[t]); before.append(0); after.append(0)  # noqa: E702
        support, mat = _propagation_matrix(gate, clocks, before, after)
        terms.append(LocalTerm((OperatorFactor(support, mat, hermitian=True),), scale))
        families["propagation"] += 1
    for t in range(1, m):
        terms.append(LocalTerm((proj(clock[t - 1], _PROJ0), proj(clock[t], _PROJ1)), scale))
        families["clock"] += 1

    ham = LayeredHamiltonian.unlayered(n + m, terms, compiler="kitaev_54", m=m)
    return ClockHamiltonian(ham, c, output_qubit, witness, clock, scale, families)


def history_state(
    c: Circuit | ClockHamiltonian,
    witness: StateVector | None = None,
    witness_qubits: Sequence[int] | None = None,
) -> StateVector:
    """``(m+1)^{-1/2} Σ_i U_i..U_1|ψ⟩|0..0⟩ ⊗ |unary(i)⟩`` on data wires + ``m`` clock wires."""
    if isinstance(c, ClockHamiltonian):
        witness_qubits = c.witness_qubits if witness_qubits is None else witness_qubits
        c = c.circuit
    witness_qubits = tuple(witness_qubits or ())
    n, m = c.num_qubits, len(c)
    if witness_qubits:
        if witness is None or witness.num_qubits != len(witness_qubits):
            raise LayoutError("witness state does not match the witness register")
        data = relabel_state(witness, {i: q for i, q in enumerate(witness_qubits)}, n).amplitudes
    else:
        if witness is not None:
            raise LayoutError("witness state given but no witness qubits")
        data = np.zeros(2**n, dtype=complex)
        data[0] = 1.0
    out = np.zeros(2 ** (n + m), dtype=complex)
    for i in range(m + 1):
        if i > 0:
            data = run_gates(data, (c.gates[i - 1],), n)
        offset = ((1 << i) - 1) << n
        out[offset : offset + 2**n] += data
    return StateVector(n + m, out / math.sqrt(m + 1))


# ---------------------------------------------------------------------------
# general local Hamiltonian -> two commuting layers


@dataclass(frozen=True)
class LayeringData:
    """Raw ``G`` and ``R`` layers plus the bookkeeping of the layering compiler.

    ``R`` already carries the ``m**r`` weight, so ``G + R`` is the penalized
    Hamiltonian whose spectrum the layering guarantees refer to.
    """

    G: LayeredHamiltonian
    R: LayeredHamiltonian
    n: int
    m: int
    levels: int
    bits: int
    k: int
    kappa: float
    b: float
    r: float
    ancillas: tuple[tuple[int, ...], ...]

    @property
    def num_qubits(self) -> int:
        return self.G.num_qubits

    def info(self) -> dict:
        return {
            "n": self.n, "m": self.m, "l": self.levels, "ancilla_bits": self.bits,
            "k": self.k, "kappa": self.kappa, "b": self.b, "r": self.r,
        }


def _as_hamiltonian(H: LayeredHamiltonian | ClockHamiltonian) -> LayeredHamiltonian:
    return H.hamiltonian if isinstance(H, ClockHamiltonian) else H


def layer_terms(
    H: LayeredHamiltonian | ClockHamiltonian,
    b: float,
    levels: int | None = None,
    level_cap: int = 8,
) -> LayeringData:
    """Attach a level-``l`` ancilla to every qubit and split ``H`` into ``G`` and ``R``.

    ``G_i = H_i ⊗ ⊗_{q} |p_q(i)-1><p_q(i)-1|_{anc(q)}`` where ``p_q(i)`` is the
    rank of term ``i`` among the terms acting on ``q``;
    ``R = m**r Σ_q (I - |γ><γ|)_{anc(q)}`` with ``γ`` uniform over the ``l``
    levels and ``r = b + 5``.  Terms of locality ``k_i`` below the maximum
    ``k`` are rescaled by ``l**(k_i - k)`` so that every term is weighted by
    the same ``κ = l**k`` on ``|γ>^{⊗n}``.
    """
    H = _as_hamiltonian(H)
    if b <= 0:
        raise InputError("b must be positive")
    terms = H.terms
    if not terms:
        raise InputError("Hamiltonian has no terms")
    for i, t in enumerate(terms):
        cert = t.certify()
        if not cert.ok:
            raise InputError(f"term {i} is not PSD with norm <= 1 (norm {cert.norm:.3g})")
    prof = degree_profile(H)
    l = max(2, prof.l) if levels is None else int(levels)
    if l < prof.l:
        raise InputError(f"{l} levels cannot host qubit degree {prof.l}")
    if l > level_cap:
        raise InputError(f"qubit degree {l} exceeds the encodable cap of {level_cap} levels")
    n, m, k = H.num_qubits, len(terms), prof.k
    bits = max(1, math.ceil(math.log2(l)))
    dim = 2**bits
    ancillas = tuple(tuple(range(n + j * bits, n + (j + 1) * bits)) for j in range(n))
    r = b + 5
    kappa = float(l) ** k

    g_terms = []
    for i, t in enumerate(terms):
        extra = []
        for q in prof.term_supports[i]:
            level = prof.position(i, q) - 1
            v = _ket(level, dim)
            extra.append(OperatorFactor(ancillas[q], np.outer(v, v), hermitian=True))
        weight = float(l) ** (len(prof.term_supports[i]) - k)
        g_terms.append(LocalTerm(t.factors + tuple(extra), t.coefficient * weight))

    gamma = np.zeros(dim, dtype=complex)
    gamma[:l] = 1 / math.sqrt(l)
    r_mat = np.eye(dim) - np.outer(gamma, gamma.conj())
    weight_r = float(m) ** r
    r_terms = [LocalTerm((OperatorFactor(anc, r_mat, hermitian=True),), weight_r) for anc in ancillas]

    total = n + n * bits
    G = LayeredHamiltonian.single_layer(total, g_terms, compiler="layer_54", part="G")
    R = LayeredHamiltonian.single_layer(total, r_terms, compiler="layer_54", part="R")
    return LayeringData(G, R, n, m, l, bits, k, kappa, float(b), float(r), ancillas)


def gamma_extend(psi: StateVector, data: LayeringData) -> StateVector:
    """``|ψ⟩ ⊗ |γ⟩^{⊗n}`` in the register of ``data``."""
    if psi.num_qubits != data.n:
        raise LayoutError("state does not match the original register")
    dim = 2**data.bits
    gamma = np.zeros(dim, dtype=complex)
    gamma[: data.levels] = 1 / math.sqrt(data.levels)
    anc = np.ones(1, dtype=complex)
    for _ in range(data.n):
        anc = np.kron(gamma, anc)
    # ancilla wires sit above the data wires, so they form the high bits
    return StateVector(data.num_qubits, np.kron(anc, psi.amplitudes))


def layer_54(
    H: LayeredHamiltonian | ClockHamiltonian,
    b: float,
    c: float = 0.0,
    s: float | None = None,
    levels: int | None = None,
    level_cap: int = 8,
) -> TwoLayerInstance:
    """Two-layer instance ``A = G/(n m^r)``, ``B = Σ_j R_j / n``.

    ``c`` and ``s`` are the completeness/soundness thresholds of ``H``
    (``s`` defaults to ``c + m**-b``).  They map to
    ``α = c/(κ n m^r)`` and ``β = (s/κ - m**-(b+1)) / (n m^r)``.
    """
    data = layer_terms(H, b, levels, level_cap)
    n, m = data.n, data.m
    norm = n * float(m) ** data.r
    s = c + float(m) ** (-b) if s is None else s
    alpha = c / (data.kappa * norm)
    beta = (s / data.kappa - float(m) ** (-(b + 1))) / norm
    if beta <= alpha:
        raise InputError(
            f"soundness gap vanishes (alpha={alpha:.3g}, beta={beta:.3g}); "
            "increase s or b"
        )
    A = LayeredHamiltonian.single_layer(
        data.num_qubits, [t.scaled(1 / norm) for t in data.G.terms], compiler="layer_54", part="A"
    )
    B = LayeredHamiltonian.single_layer(
        data.num_qubits,
        [t.scaled(1 / (n * t.coefficient)) for t in data.R.terms],
        compiler="layer_54",
        part="B",
    )
    meta = dict(data.info(), c=c, s=s)
    return TwoLayerInstance(A, B, alpha, beta, meta)


# ---------------------------------------------------------------------------
# two layers -> commuting connectivity instance


@dataclass(frozen=True)
class RegisterLayout:
    """First register ``0..n-1``; second and third registers of three qubits each."""

    n: int

    @property
    def reg2(self) -> tuple[int, int, int]:
        return (self.n, self.n + 1, self.n + 2)

    @property
    def reg3(self) -> tuple[int, int, int]:
        return (self.n + 3, self.n + 4, self.n + 5)

    @property
    def num_qubits(self) -> int:
        return self.n + 6

    def factor(self, register: int, matrix: np.ndarray, hermitian: bool = True) -> OperatorFactor:
        support = self.reg2 if register == 2 else self.reg3
        return OperatorFactor(support, matrix, hermitian=hermitian)

    def pair_factor(self, m2: np.ndarray, m3: np.ndarray, hermitian: bool = True) -> OperatorFactor:
        """``m2`` on the second register ⊗ ``m3`` on the third, as one 6-qubit factor."""
        return OperatorFactor(self.reg2 + self.reg3, np.kron(m3, m2), hermitian=hermitian)


@dataclass(frozen=True)
class TraversalPath:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            if max(g.support) >= self.num_qubits:
                raise InputError(f"gate support {g.support} out of range")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)


def soundness_threshold(beta: float, m_max: int) -> float:
    """``β² / (64 m_max⁶)``."""
    return beta**2 / (64.0 * float(m_max) ** 6)


@dataclass(frozen=True)
class CgsconInstance:
    H: LayeredHamiltonian
    prep_psi: Circuit
    prep_phi: Circuit
    c: float
    s: float
    m_max: int
    k_unitaries: int = 2
    layout: RegisterLayout | None = None
    source: TwoLayerInstance | None = None
    penalty: OperatorFactor | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.H.num_qubits
        if self.prep_psi.num_qubits != n or self.prep_phi.num_qubits != n:
            raise InputError("preparation circuits must act on the Hamiltonian's register")
        if self.m_max < 0:
            raise InputError("path-length budget must be nonnegative")
        if self.layout is not None and self.layout.num_qubits != n:
            raise LayoutError("register layout does not match the Hamiltonian")

    @property
    def num_qubits(self) -> int:
        return self.H.num_qubits

    @property
    def alpha(self) -> float | None:
        return None if self.source is None else self.source.alpha

    @property
    def beta(self) -> float | None:
        return None if self.source is None else self.source.beta


def two_layer_to_cgscon(t: TwoLayerInstance, m_max: int) -> CgsconInstance:
    rep_a, rep_b = check_layered(t.A), check_layered(t.B)
    if not rep_a.ok or not rep_b.ok:
        raise InputError(
            f"A or B is not a commuting layer (worst commutators {rep_a.worst_norm:.3g}, {rep_b.worst_norm:.3g})"
        )
    if m_max < 3:
        raise InputError("path-length budget must allow at least the three register flips")
    layout = RegisterLayout(t.num_qubits)
    pi2 = layout.factor(2, PI)
    plus3, minus3, pi3 = layout.factor(3, PPLUS), layout.factor(3, PMINUS), layout.factor(3, PI)
    terms = [LocalTerm(a.factors + (pi2, plus3), a.coefficient) for a in t.A.terms]
    terms += [LocalTerm(b.factors + (pi2, minus3), b.coefficient) for b in t.B.terms]
    terms.append(LocalTerm((pi3,), 1.0))
    n = layout.num_qubits
    H = LayeredHamiltonian.single_layer(
        n, terms, compiler="two_layer_to_cgscon", n_A=len(t.A.terms), n_B=len(t.B.terms)
    )
    prep_psi = Circuit(n, ())
    prep_phi = Circuit(n, tuple(X(q) for q in layout.reg2))
    c = t.alpha / 2
    s = soundness_threshold(t.beta, m_max)
    if c >= s:
        warnings.warn(
            f"compiled instance has c={c:.3g} >= s={s:.3g}; promise gap is empty at this budget",
            PromiseGapWarning,
            stacklevel=2,
        )
    meta = {"soundness_constant": 1 / 64, "alpha": t.alpha, "beta": t.beta}
    return CgsconInstance(H, prep_psi, prep_phi, c, s, int(m_max), 2, layout, t, pi3, meta)


def completeness_path(prep: Circuit, n: int | None = None) -> TraversalPath:
    """``C``, then X on each second-register qubit, then ``C†``; length ``2m' + 3``."""
    n = prep.num_qubits if n is None else n
    for g in prep.gates:
        if max(g.support) >= n:
            raise LayoutError(f"preparation gate on {g.support} touches the ancilla registers")
    layout = RegisterLayout(n)
    total = layout.num_qubits
    gates = list(prep.gates) + [X(q) for q in layout.reg2] + list(inverse(prep).gates)
    return TraversalPath(total, tuple(gates))
