"""Ground energies: dense diagonalization and Lanczos with full reorthogonalization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import CapError
from .hamiltonian import LayeredHamiltonian, to_dense

DENSE_MAX_QUBITS = 12

__all__ = ["GroundEnergyResult", "ground_energy_dense", "ground_energy_iterative", "lanczos_min"]


@dataclass(frozen=True)
class GroundEnergyResult:
    value: float
    residual: float
    method: str
    iterations: int
    converged: bool = True
    vector: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "residual": self.residual,
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def ground_energy_dense(H: LayeredHamiltonian | np.ndarray) -> GroundEnergyResult:
    """Smallest eigenvalue of the densified Hamiltonian (LAPACK ``heevd``)."""
    if isinstance(H, LayeredHamiltonian):
        if H.num_qubits > DENSE_MAX_QUBITS:
            raise CapError(f"{H.num_qubits} qubits exceeds the dense cap of {DENSE_MAX_QUBITS}")
        mat = to_dense(H, DENSE_MAX_QUBITS)
    else:
        mat = np.asarray(H, dtype=complex)
    mat = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(mat)
    x = v[:, 0]
    residual = float(np.linalg.norm(mat @ x - w[0] * x))
    return GroundEnergyResult(float(w[0]), residual, "dense", 1, True, x)


def lanczos_min(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-9,
    max_iter: int | None = None,
    rng: np.random.Generator | None = None,
    check_every: int = 1,
) -> GroundEnergyResult:
    """Smallest eigenpair of a Hermitian operator given only through ``apply``.

    Full Gram-Schmidt reorthogonalization (two passes) against the stored
    Krylov basis.  Convergence is declared from the Ritz residual estimate
    ``beta_j |y_j|`` and then confirmed with a residual recomputed from scratch.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    max_iter = min(dim, 1000) if max_iter is None else min(max_iter, dim)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)

    basis = np.zeros((max_iter + 1, dim), dtype=complex)
    basis[0] = v
    alphas: list[float] = []
    betas: list[float] = []
    theta, y = 0.0, np.ones(1)
    breakdown = False
    j = 0
    for j in range(1, max_iter + 1):
        w = apply(basis[j - 1])
        a = float(np.vdot(basis[j - 1], w).real)
        w = w - a * basis[j - 1]
        if j > 1:
            w = w - betas[-1] * basis[j - 2]
        for _ in range(2):
            w = w - basis[:j].T @ (basis[:j].conj() @ w)
        b = float(np.linalg.norm(w))
        alphas.append(a)

        if j == 1:
            theta, y = a, np.ones(1)
        else:
            ev, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas), select="i", select_range=(0, 0))
            theta, y = float(ev[0]), vecs[:, 0]
        scale = max(1.0, abs(theta))
        if b <= 1e-12 * scale:
            breakdown = True
            break
        if (j % check_every == 0 and abs(b * y[-1]) <= tol) or j == max_iter:
            x = basis[:j].T @ y
            x /= np.linalg.norm(x)
            if np.linalg.norm(apply(x) - theta * x) <= tol or j == max_iter:
                break
        betas.append(b)
        basis[j] = w / b

    x = basis[:j].T @ y
    x /= np.linalg.norm(x)
    hx = apply(x)
    theta = float(np.vdot(x, hx).real)
    residual = float(np.linalg.norm(hx - theta * x))
    converged = residual <= tol or (breakdown and residual <= max(tol, 1e-8))
    return GroundEnergyResult(theta, residual, "iterative", j, converged, x)


def ground_energy_iterative(
    H: LayeredHamiltonian,
    tol: float = 1e-9,
    max_iter: int | None = None,
    seed: int = 0,
) -> GroundEnergyResult:
    """Lanczos ground energy via term-wise matrix-vector products.

    The start vector comes from ``numpy.random.default_rng(seed)`` (PCG64).
    Non-convergence is reported through ``converged``, not raised.
    """
    return lanczos_min(H.apply, 2**H.num_qubits, tol, max_iter, np.random.default_rng(seed))
