"""Circuits over 1- and 2-qubit gates, simulation, inversion and SWAP normalization."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import InputError
from .qstate import ATOL, StateVector, apply_matrix

__all__ = [
    "Gate",
    "Circuit",
    "GATE_LIBRARY",
    "named_gate",
    "X",
    "Z",
    "H",
    "T",
    "CNOT",
    "SWAP",
    "simulate",
    "inverse",
    "swap_normalize",
    "relabel_state",
    "random_circuit",
]

_s2 = 1 / np.sqrt(2)
# two-qubit matrices use the local convention: bit 0 = support[0] (control for CNOT/CZ)
GATE_LIBRARY: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": np.array([[_s2, _s2], [_s2, -_s2]], dtype=complex),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "Tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_INVERSE_NAME = {"S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T"}
_SELF_INVERSE = {"I", "X", "Y", "Z", "H", "CNOT", "CZ", "SWAP"}


@dataclass(frozen=True)
class Gate:
    support: tuple[int, ...]
    unitary: np.ndarray
    name: str = "raw"

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        if len(support) not in (1, 2) or len(set(support)) != len(support):
            raise InputError(f"gate support must be 1 or 2 distinct qubits, got {support}")
        u = np.array(self.unitary, dtype=complex)
        dim = 2 ** len(support)
        if u.shape != (dim, dim):
            raise InputError(f"gate matrix shape {u.shape} does not match support {support}")
        if np.max(np.abs(u @ u.conj().T - np.eye(dim))) > ATOL:
            raise InputError(f"gate {self.name} on {support} is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "unitary", u)

    def dagger(self) -> "Gate":
        if self.name in _SELF_INVERSE:
            name = self.name
        elif self.name in _INVERSE_NAME:
            name = _INVERSE_NAME[self.name]
        else:
            name = "raw"
        return Gate(self.support, self.unitary.conj().T, name)

    def relabeled(self, wires: Sequence[int]) -> "Gate":
        return Gate(tuple(wires[q] for q in self.support), self.unitary, self.name)


def named_gate(name: str, *support: int) -> Gate:
    try:
        u = GATE_LIBRARY[name]
    except KeyError:
        raise InputError(f"unknown gate name {name!r}") from None
    return Gate(tuple(support), u, name)


def X(q: int) -> Gate:
    return named_gate("X", q)


def Z(q: int) -> Gate:
    return named_gate("Z", q)


def H(q: int) -> Gate:
    return named_gate("H", q)


def T(q: int) -> Gate:
    return named_gate("T", q)


def CNOT(control: int, target: int) -> Gate:
    return named_gate("CNOT", control, target)


def SWAP(a: int, b: int) -> Gate:
    return named_gate("SWAP", a, b)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        gates = tuple(self.gates)
        if self.num_qubits < 1:
            raise InputError("circuit needs at least one qubit")
        for g in gates:
            if max(g.support) >= self.num_qubits:
                raise InputError(f"gate support {g.support} out of range for {self.num_qubits} qubits")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def gate_counts(self) -> list[int]:
        counts = Counter(q for g in self.gates for q in g.support)
        return [counts.get(q, 0) for q in range(self.num_qubits)]

    def widened(self, n: int) -> "Circuit":
        return Circuit(n, self.gates)


def run_gates(amps: np.ndarray, gates: Sequence[Gate], n: int) -> np.ndarray:
    for g in gates:
        amps = apply_matrix(amps, g.unitary, g.support, n)
    return amps


def simulate(c: Circuit, state: StateVector | None = None) -> StateVector:
    """``U_m ... U_1 |state>``; starts from ``|0...0>`` when no state is given."""
    if state is None:
        amps = np.zeros(2**c.num_qubits, dtype=complex)
        amps[0] = 1.0
    else:
        if state.num_qubits != c.num_qubits:
            raise InputError(f"state has {state.num_qubits} qubits, circuit {c.num_qubits}")
        amps = state.amplitudes
    return StateVector(c.num_qubits, run_gates(amps, c.gates, c.num_qubits))


def inverse(c: Circuit) -> Circuit:
    return Circuit(c.num_qubits, tuple(g.dagger() for g in reversed(c.gates)))


def swap_normalize(c: Circuit, budget: int = 3, output: int | None = None) -> tuple[Circuit, dict[int, int]]:
    """Rewrite ``c`` so that every wire carries at most ``budget`` gates.

    Greedy policy: before a logical qubit takes a gate that would leave its
    wire with no room for a later swap-out, its state is swapped onto a fresh
    ancilla wire (initialized to ``|0>``).  SWAPs count against both wires.
    When ``output`` is given, the wire holding that qubit at the end carries at
    most ``budget - 1`` gates, leaving room for the output check term.
    Returns the new circuit and the final wire of every logical qubit.
    Ancilla wires are numbered from ``c.num_qubits`` upward.
    """
    if budget < 3:
        raise InputError("swap normalization needs a per-wire budget of at least 3")
    identity = {q: q for q in range(c.num_qubits)}
    counts = c.gate_counts()
    out_ok = output is None or counts[output] <= budget - 1
    if max(counts, default=0) <= budget and out_ok:
        return c, identity

    remaining = Counter(q for g in c.gates for q in g.support)
    if output is not None:
        remaining[output] += 1  # phantom final use keeps a slot free
    loc = dict(identity)
    count = [0] * c.num_qubits
    out: list[Gate] = []
    for g in c.gates:
        for q in g.support:
            remaining[q] -= 1
        for q in g.support:
            w = loc[q]
            room = budget - 1 if remaining[q] > 0 else budget
            if count[w] + 1 > room:
                fresh = len(count)
                count.append(0)
                out.append(SWAP(w, fresh))
                count[w] += 1
                count[fresh] += 1
                loc[q] = fresh
        out.append(Gate(tuple(loc[q] for q in g.support), g.unitary, g.name))
        for q in g.support:
            count[loc[q]] += 1
    return Circuit(len(count), tuple(out)), loc


def relabel_state(state: StateVector, mapping: dict[int, int], num_qubits: int) -> StateVector:
    """Place logical qubit ``q`` of ``state`` on wire ``mapping[q]``; other wires are ``|0>``."""
    n = state.num_qubits
    if sorted(mapping) != list(range(n)):
        raise InputError("mapping must cover every logical qubit")
    idx = np.arange(2**n)
    new = np.zeros_like(idx)
    for q, w in mapping.items():
        if not 0 <= w < num_qubits:
            raise InputError(f"wire {w} out of range")
        new |= ((idx >> q) & 1) << w
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[new] = state.amplitudes
    return StateVector(num_qubits, amps)


def random_circuit(n: int, m: int, rng: np.random.Generator, two_qubit_fraction: float = 0.6) -> Circuit:
    """``m`` Haar-random gates; two-qubit gates on random pairs when ``n > 1``."""
    gates = []
    for _ in range(m):
        if n > 1 and rng.random() < two_qubit_fraction:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate((int(a), int(b)), unitary_group.rvs(4, random_state=rng)))
        else:
            gates.append(Gate((int(rng.integers(n)),), unitary_group.rvs(2, random_state=rng)))
    return Circuit(n, tuple(gates))
