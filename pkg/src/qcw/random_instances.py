"""Seeded generators for test and benchmark instances."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .circuits import Circuit, Gate, random_circuit, simulate
from .errors import InputError
from .hamiltonian import LayeredHamiltonian, LocalTerm, TwoLayerInstance, to_dense
from .qstate import OperatorFactor, StateVector
from .reductions import CgsconInstance, TraversalPath, completeness_path

__all__ = [
    "random_local_factor",
    "random_commuting_layers",
    "yes_instance",
    "no_instance",
    "bit_flip_no_instance",
    "perturbed_path",
    "random_psd_hamiltonian",
    "random_k_orthogonal_pair",
    "random_state_pair",
]


def _random_support(n: int, max_locality: int, rng) -> tuple[int, ...]:
    k = int(rng.integers(1, min(max_locality, n) + 1))
    return tuple(sorted(int(q) for q in rng.choice(n, size=k, replace=False)))


def random_local_factor(support, rng, rotation: np.ndarray | None = None) -> OperatorFactor:
    """``W D W†`` with ``D`` diagonal in ``[0, 1]``; ``W = I`` when no rotation is given."""
    d = np.diag(rng.random(2 ** len(support)))
    m = d if rotation is None else rotation @ d @ rotation.conj().T
    return OperatorFactor(tuple(support), m, hermitian=True)


def _layer(n, num_terms, max_locality, rng, single_qubit_rotations=None) -> LayeredHamiltonian:
    weights = rng.random(num_terms)
    weights /= weights.sum()  # keeps 0 <= layer <= I
    terms = []
    for w in weights:
        s = _random_support(n, max_locality, rng)
        rot = None
        if single_qubit_rotations is not None:
            rot = np.eye(1)
            for q in s:  # local bit t is support[t]
                rot = np.kron(single_qubit_rotations[q], rot)
        terms.append(LocalTerm((random_local_factor(s, rng, rot),), float(w)))
    return LayeredHamiltonian.single_layer(n, terms)


def random_commuting_layers(
    n: int,
    rng: np.random.Generator,
    num_terms: int | None = None,
    max_locality: int = 3,
) -> tuple[LayeredHamiltonian, LayeredHamiltonian]:
    """``A`` diagonal in the computational basis, ``B`` diagonal in a random product basis."""
    if n < 1:
        raise InputError("need at least one qubit")
    num_terms = int(rng.integers(1, 2 * n + 2)) if num_terms is None else num_terms
    rots = [unitary_group.rvs(2, random_state=rng) for _ in range(n)]
    A = _layer(n, num_terms, max_locality, rng)
    B = _layer(n, num_terms, max_locality, rng, rots)
    return A, B


def yes_instance(n: int, rng: np.random.Generator, prep_gates: int = 4, max_locality: int = 3):
    """Random layers plus a random preparation circuit ``C``.

    ``α`` is set to ``<ψ|A+B|ψ>`` for ``ψ = C|0⟩``, so ``C`` witnesses the YES case.
    Returns ``(TwoLayerInstance, C)``.
    """
    A, B = random_commuting_layers(n, rng, max_locality=max_locality)
    prep = random_circuit(n, prep_gates, rng)
    psi = simulate(prep).amplitudes
    alpha = A.expectation(psi) + B.expectation(psi)
    beta = alpha + 0.5 * (2.0 - alpha)
    return TwoLayerInstance(A, B, float(alpha), float(beta), {"kind": "yes"}), prep


def no_instance(n: int, rng: np.random.Generator, min_beta: float = 0.05, max_tries: int = 200, max_locality: int = 3):
    """Random layers with dense-certified ``λ_min(A+B) = β >= min_beta``; ``α = β/2``."""
    if n > 10:
        raise InputError("dense certification is limited to 10 qubits")
    for _ in range(max_tries):
        A, B = random_commuting_layers(n, rng, max_locality=max_locality)
        lam = float(np.linalg.eigvalsh(to_dense(A) + to_dense(B))[0])
        if lam >= min_beta:
            return TwoLayerInstance(A, B, lam / 2, lam, {"kind": "no", "certified_lambda_min": lam})
    raise InputError(f"no instance with lambda_min >= {min_beta} found in {max_tries} draws")


def bit_flip_no_instance(beta: float, n: int = 1) -> TwoLayerInstance:
    """``A = β|0⟩⟨0|``, ``B = β|1⟩⟨1|`` on qubit 0, so ``A + B = βI``."""
    if not 0 < beta <= 1:
        raise InputError("beta must lie in (0, 1]")
    A = LayeredHamiltonian.single_layer(n, [LocalTerm((OperatorFactor((0,), np.diag([1.0, 0.0])),), beta)])
    B = LayeredHamiltonian.single_layer(n, [LocalTerm((OperatorFactor((0,), np.diag([0.0, 1.0])),), beta)])
    return TwoLayerInstance(A, B, beta / 2, beta, {"kind": "no", "certified_lambda_min": beta})


def perturbed_path(inst: CgsconInstance, rng: np.random.Generator, strength: float = 0.1,
                   prep: Circuit | None = None, extra: int = 0) -> TraversalPath:
    """Completeness-style path with every gate multiplied by a random near-identity unitary.

    ``extra`` random 2-qubit gates of the same strength are spliced in at random
    positions; the result is truncated to ``m_max``.
    """
    n = inst.layout.n if inst.layout is not None else inst.num_qubits
    base = completeness_path(prep if prep is not None else Circuit(n, ()), n)
    total = base.num_qubits

    def kick(dim):
        herm = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        herm = (herm + herm.conj().T) / 2
        w, v = np.linalg.eigh(herm)
        return (v * np.exp(1j * strength * w)) @ v.conj().T

    gates = [Gate(g.support, kick(2 ** len(g.support)) @ g.unitary, "raw") for g in base.gates]
    for _ in range(extra):
        a, b = rng.choice(total, size=2, replace=False)
        gates.insert(int(rng.integers(len(gates) + 1)), Gate((int(a), int(b)), kick(4), "raw"))
    return TraversalPath(total, tuple(gates[: inst.m_max]))


def random_psd_hamiltonian(n: int, rng: np.random.Generator, num_terms: int | None = None,
                           max_locality: int = 3) -> LayeredHamiltonian:
    """Generic (non-commuting) PSD terms ``c·M`` with ``M = G G†`` on random supports."""
    num_terms = int(rng.integers(n, 3 * n + 1)) if num_terms is None else num_terms
    terms = []
    for _ in range(num_terms):
        s = _random_support(n, max_locality, rng)
        d = 2 ** len(s)
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = g @ g.conj().T
        m /= np.linalg.norm(m, 2)
        terms.append(LocalTerm((OperatorFactor(s, m, hermitian=True),), float(rng.random())))
    return LayeredHamiltonian.unlayered(n, terms)


def _hamming_far_strings(n: int, count: int, distance: int, rng) -> list[int]:
    pool = [int(x) for x in rng.permutation(2**n)]
    chosen: list[int] = []
    for x in pool:
        if all(bin(x ^ y).count("1") >= distance for y in chosen):
            chosen.append(x)
        if len(chosen) == count:
            break
    return chosen


def random_k_orthogonal_pair(n: int, k: int, rng: np.random.Generator, terms: int = 2) -> tuple[StateVector, StateVector]:
    """Two states whose computational supports are pairwise at Hamming distance > ``k``."""
    strings = _hamming_far_strings(n, 2 * terms, k + 1, rng)
    if len(strings) < 2:
        raise InputError(f"no strings at Hamming distance {k + 1} on {n} qubits")
    half = len(strings) // 2
    out = []
    for group in (strings[:half], strings[half:]):
        amps = np.zeros(2**n, dtype=complex)
        c = rng.normal(size=len(group)) + 1j * rng.normal(size=len(group))
        amps[group] = c / np.linalg.norm(c)
        out.append(StateVector(n, amps))
    return out[0], out[1]


def random_state_pair(n: int, rng: np.random.Generator, sparsity: int | None = None) -> tuple[StateVector, StateVector]:
    """Random pair, optionally each supported on ``sparsity`` random basis strings."""
    out = []
    for _ in range(2):
        amps = np.zeros(2**n, dtype=complex)
        idx = np.arange(2**n) if sparsity is None else rng.choice(2**n, size=sparsity, replace=False)
        c = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
        amps[idx] = c / np.linalg.norm(c)
        out.append(StateVector(n, amps))
    return out[0], out[1]

