"""Independent reference implementations used only by the tests.

Everything here is built from explicit index loops or full Kronecker
products, never from the package's tensordot kernels.
"""
from __future__ import annotations

import itertools

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


def dense_embed(matrix: np.ndarray, support, n: int) -> np.ndarray:
    """Full ``2^n`` matrix of ``matrix`` acting on ``support`` (bit ``t`` <-> ``support[t]``)."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    others = [q for q in range(n) if q not in support]
    for i in range(dim):
        for j in range(dim):
            if any(((i >> q) & 1) != ((j >> q) & 1) for q in others):
                continue
            li = sum(((i >> q) & 1) << t for t, q in enumerate(support))
            lj = sum(((j >> q) & 1) << t for t, q in enumerate(support))
            out[i, j] = matrix[li, lj]
    return out


def kron_chain(ops_by_qubit: dict, n: int) -> np.ndarray:
    """``⊗_q ops[q]`` with qubit 0 as the rightmost (least significant) factor."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(ops_by_qubit.get(q, I2), out)
    return out


def term_dense(term, n: int) -> np.ndarray:
    out = np.eye(2**n, dtype=complex)
    for f in term.factors:
        out = out @ dense_embed(f.matrix, f.support, n)
    return term.coefficient * out


def hamiltonian_dense(H) -> np.ndarray:
    n = H.num_qubits
    return sum((term_dense(t, n) for t in H.terms), np.zeros((2**n, 2**n), dtype=complex))


def reduced_outer(psi: np.ndarray, phi: np.ndarray, keep, n: int) -> np.ndarray:
    """``Tr_{rest} |phi><psi|`` by summing over the traced bits explicitly."""
    k = len(keep)
    out = np.zeros((2**k, 2**k), dtype=complex)
    rest = [q for q in range(n) if q not in keep]
    for a in range(2**k):
        for b in range(2**k):
            total = 0.0
            for r in range(2 ** len(rest)):
                base = sum(((r >> t) & 1) << q for t, q in enumerate(rest))
                ia = base + sum(((a >> t) & 1) << q for t, q in enumerate(keep))
                ib = base + sum(((b >> t) & 1) << q for t, q in enumerate(keep))
                total += phi[ia] * np.conj(psi[ib])
            out[a, b] = total
    return out


def k_orthogonal_brute(psi: np.ndarray, phi: np.ndarray, k: int, n: int, atol: float = 1e-10) -> bool:
    """Overlap with every ``k``-local Pauli string; Paulis span all ``k``-local operators."""
    paulis = [I2, X, Y, Z]
    for sub in itertools.combinations(range(n), k):
        for choice in itertools.product(paulis, repeat=k):
            op = kron_chain(dict(zip(sub, choice)), n)
            if abs(np.vdot(psi, op @ phi)) > atol:
                return False
    return True


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(i t h)`` via a truncated Taylor series with scaling and squaring."""
    a = 1j * t * h
    s = max(0, int(np.ceil(np.log2(max(np.linalg.norm(a, 1), 1e-16)))) + 1)
    a = a / 2**s
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for j in range(1, 30):
        term = term @ a / j
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def kitaev_dense(gates, n: int, witness, output: int) -> np.ndarray:
    """Unary-clock circuit Hamiltonian built term by term on the full ``n + m`` register."""
    m = len(gates)
    N = n + m
    clock = [n + t for t in range(m)]
    H = np.zeros((2**N, 2**N), dtype=complex)
    for j in range(n):
        if j not in witness:
            H += kron_chain({j: P1, clock[0]: P0}, N)
    H += kron_chain({output: P0, clock[-1]: P1}, N)
    for t, (support, u) in enumerate(gates, start=1):
        U = dense_embed(u, support, N)
        if m == 1:
            a, b = {clock[0]: P0}, {clock[0]: P1}
            ba = {clock[0]: np.array([[0, 0], [1, 0]])}
        else:
            # |..1 0 0..> -> |..1 1 0..> on clocks t-1, t, t+1
            a, b, ba = {}, {}, {}
            if t > 1:
                for d in (a, b, ba):
                    d[clock[t - 2]] = P1
            a[clock[t - 1]], b[clock[t - 1]] = P0, P1
            ba[clock[t - 1]] = np.array([[0, 0], [1, 0]])
            if t < m:
                for d in (a, b, ba):
                    d[clock[t]] = P0
        Pa, Pb, Tba = kron_chain(a, N), kron_chain(b, N), kron_chain(ba, N)
        H += 0.5 * (Pa + Pb - U @ Tba - Tba.conj().T @ U.conj().T)
    for t in range(1, m):
        H += kron_chain({clock[t - 1]: P0, clock[t]: P1}, N)
    return H / (m + 1)
