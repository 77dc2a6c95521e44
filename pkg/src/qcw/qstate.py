"""Dense state vectors and small operators acting on qubit subsets.

Index convention (used everywhere in the package): qubit ``q`` is bit ``q`` of
the amplitude index, i.e. qubit 0 is the least-significant bit.  The same rule
applies *locally* to small matrices: for a matrix acting on ``support =
(s0, s1, ...)``, bit ``t`` of its row/column index is qubit ``support[t]``.
Hence ``np.kron(M1, M0)`` is the operator with ``M0`` on ``support[0]`` and
``M1`` on ``support[1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapError, InputError

MAX_QUBITS = 24
MAX_FACTOR_QUBITS = 6
ATOL = 1e-12

__all__ = [
    "StateVector",
    "OperatorFactor",
    "zero_state",
    "basis_state",
    "random_state",
    "apply_factor",
    "apply_matrix",
    "inner",
    "partial_trace_outer",
    "embed_matrix",
]


# ---------------------------------------------------------------------------
# array kernels


def apply_matrix(amps: np.ndarray, matrix: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    """Return ``(M ⊗ I) amps`` for ``M`` acting on ``support`` of an ``n``-qubit register.

    ``amps`` may carry trailing batch dimensions, shape ``(2**n, ...)``.
    ``support`` need not be sorted; bit ``t`` of the local index is ``support[t]``.
    """
    k = len(support)
    if k == 0:
        return np.asarray(matrix).reshape(()) * amps
    batch = amps.shape[1:]
    psi = amps.reshape((2,) * n + batch)
    mat = np.asarray(matrix).reshape((2,) * (2 * k))
    # tensor axis of qubit q is n-1-q; matrix axes run from support[k-1] down to support[0]
    state_axes = [n - 1 - support[k - 1 - t] for t in range(k)]
    out = np.tensordot(mat, psi, axes=(list(range(k, 2 * k)), state_axes))
    out = np.moveaxis(out, list(range(k)), state_axes)
    return out.reshape(amps.shape)


def _grouped(amps: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reshape to ``(2**|keep|, rest)`` with ``keep`` forming the row index (LSB = keep[0])."""
    k = len(keep)
    psi = amps.reshape((2,) * n)
    front = [n - 1 - keep[k - 1 - t] for t in range(k)]
    psi = np.moveaxis(psi, front, list(range(k)))
    return psi.reshape(2**k, -1)


def embed_matrix(matrix: np.ndarray, sub_support: Sequence[int], full_support: Sequence[int]) -> np.ndarray:
    """Dense matrix on ``full_support`` equal to ``matrix`` on ``sub_support`` tensored with identity."""
    pos = {q: i for i, q in enumerate(full_support)}
    try:
        local = [pos[q] for q in sub_support]
    except KeyError as exc:
        raise InputError(f"qubit {exc.args[0]} not in full support {list(full_support)}") from None
    n = len(full_support)
    eye = np.eye(2**n, dtype=complex)
    return apply_matrix(eye, np.asarray(matrix, dtype=complex), local, n)


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class StateVector:
    """Amplitudes of an ``num_qubits``-qubit register.

    ``normalized`` is computed on construction; non-unitary operator
    application produces vectors with ``normalized == False``.
    """

    num_qubits: int
    amplitudes: np.ndarray
    normalized: bool = field(init=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if self.num_qubits < 1:
            raise InputError("register must hold at least one qubit")
        if amps.shape[0] != 2**self.num_qubits:
            raise InputError(f"expected {2**self.num_qubits} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "normalized", bool(abs(np.linalg.norm(amps) - 1.0) <= 1e-10))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def distance(self, other: "StateVector") -> float:
        _same_register(self, other)
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


@dataclass(frozen=True)
class OperatorFactor:
    """A dense matrix on a small sorted qubit support.

    ``hermitian`` / ``unitary`` flags are verified on construction.
    """

    support: tuple[int, ...]
    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        if len(support) > MAX_FACTOR_QUBITS:
            raise CapError(f"factor support {support} exceeds {MAX_FACTOR_QUBITS} qubits")
        if list(support) != sorted(set(support)):
            raise InputError(f"factor support must be sorted and distinct, got {support}")
        if any(q < 0 for q in support):
            raise InputError(f"negative qubit index in {support}")
        mat = np.array(self.matrix, dtype=complex)
        dim = 2 ** len(support)
        if mat.shape != (dim, dim):
            raise InputError(f"matrix shape {mat.shape} does not match support of size {len(support)}")
        if self.hermitian and np.max(np.abs(mat - mat.conj().T), initial=0.0) > ATOL:
            raise InputError("factor flagged Hermitian is not Hermitian")
        if self.unitary and np.max(np.abs(mat @ mat.conj().T - np.eye(dim)), initial=0.0) > ATOL:
            raise InputError("factor flagged unitary is not unitary")
        mat.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", mat)

    @property
    def size(self) -> int:
        return len(self.support)

    def is_identity(self, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.matrix, np.eye(self.matrix.shape[0]), rtol=0.0, atol=atol))

    def acts_trivially_on(self, q: int, atol: float = ATOL) -> bool:
        """True when the matrix factorizes as ``I_q ⊗ M'`` for qubit ``q`` of its support."""
        t = self.support.index(q)
        k = len(self.support)
        grouped = _grouped(self.matrix.reshape(-1), [t, k + t], 2 * k)
        # grouped[(out_bit, in_bit), rest]; trivial iff block(0,0)==block(1,1) and off-diagonals vanish
        a, b, c, d = grouped
        return bool(
            np.max(np.abs(a - d), initial=0.0) <= atol
            and np.max(np.abs(b), initial=0.0) <= atol
            and np.max(np.abs(c), initial=0.0) <= atol
        )

    def spectral_norm(self) -> float:
        if self.hermitian:
            return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))
        return float(np.linalg.norm(self.matrix, 2))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def dagger(self) -> "OperatorFactor":
        return OperatorFactor(self.support, self.matrix.conj().T, self.hermitian, self.unitary)


# ---------------------------------------------------------------------------
# operations


def _check_size(n: int, cap: int = MAX_QUBITS) -> None:
    if n < 1:
        raise InputError("register must hold at least one qubit")
    if n > cap:
        raise CapError(f"{n} qubits exceeds the register cap of {cap}")


def zero_state(n: int, cap: int = MAX_QUBITS) -> StateVector:
    _check_size(n, cap)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def basis_state(bits: str | int, n: int | None = None) -> StateVector:
    """Computational basis state.

    A bit string is read left-to-right as qubits ``n-1 ... 0`` (usual ket
    notation), so ``basis_state("001")`` has qubit 0 set.
    """
    if isinstance(bits, str):
        n = len(bits) if n is None else n
        index = int(bits, 2)
    else:
        if n is None:
            raise InputError("register size required for integer basis index")
        index = int(bits)
    _check_size(n)
    if not 0 <= index < 2**n:
        raise InputError(f"basis index {index} out of range for {n} qubits")
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    _check_size(n)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def _check_support(support: Sequence[int], n: int) -> None:
    if any(q < 0 or q >= n for q in support):
        raise InputError(f"support {tuple(support)} out of range for {n} qubits")


def apply_factor(state: StateVector, f: OperatorFactor) -> StateVector:
    _check_support(f.support, state.num_qubits)
    return StateVector(state.num_qubits, apply_matrix(state.amplitudes, f.matrix, f.support, state.num_qubits))


def _same_register(a: StateVector, b: StateVector) -> None:
    if a.num_qubits != b.num_qubits:
        raise InputError(f"register size mismatch: {a.num_qubits} vs {b.num_qubits}")


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    _same_register(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace_outer(psi: StateVector, phi: StateVector, keep: Sequence[int]) -> np.ndarray:
    """``Tr_{not keep} |phi><psi|`` as a ``2**|keep|`` square matrix.

    With this ordering ``<psi|(U ⊗ I)|phi> == trace(U @ M)`` for any ``U`` on ``keep``.
    """
    _same_register(psi, phi)
    keep = sorted(int(q) for q in keep)
    if len(keep) > MAX_FACTOR_QUBITS:
        raise CapError(f"cannot keep more than {MAX_FACTOR_QUBITS} qubits")
    if len(set(keep)) != len(keep):
        raise InputError("duplicate qubit in keep set")
    _check_support(keep, psi.num_qubits)
    n = psi.num_qubits
    a = _grouped(phi.amplitudes, keep, n)
    b = _grouped(psi.amplitudes, keep, n)
    return a @ b.conj().T
