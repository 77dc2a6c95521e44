"""Adversarial search for low-energy traversals over parameterized 2-qubit gates.

Each gate is ``U = exp(i Σ_a θ_a B_a)`` with ``B_a`` running over the 16
two-qubit Pauli products: ``B[4*b + a] = σ_b ⊗ σ_a`` where ``σ_a`` acts on the
first (lower) qubit of the pair, ``σ = (I, X, Y, Z)``.

The objective is ``λ ε² + τ log Σ_i exp(E_i / τ)``, a smooth surrogate of
``max{ε, max_i E_i}``; runs are ranked by that exact score.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import schur
from scipy.special import logsumexp, softmax

from .circuits import GATE_LIBRARY, Gate, simulate
from .errors import InputError
from .qstate import _grouped, apply_matrix
from .reductions import CgsconInstance, TraversalPath
from .verify import PathTrace, evaluate_path

__all__ = [
    "PAULI_BASIS",
    "ParamPath",
    "OptimizerConfig",
    "OptimizeResult",
    "brickwork_schedule",
    "materialize",
    "gate_unitary",
    "unitary_to_theta",
    "objective",
    "objective_and_gradient",
    "finite_difference_gradient",
    "optimize",
]

_PAULIS = [GATE_LIBRARY[k] for k in ("I", "X", "Y", "Z")]
PAULI_BASIS = np.array([np.kron(_PAULIS[b], _PAULIS[a]) for b in range(4) for a in range(4)])
_SWAP = GATE_LIBRARY["SWAP"]


def _eig_generator(theta: np.ndarray):
    gen = np.tensordot(theta, PAULI_BASIS, axes=1)
    w, v = np.linalg.eigh(gen)
    return w, v


def gate_unitary(theta: np.ndarray) -> np.ndarray:
    w, v = _eig_generator(np.asarray(theta, dtype=float))
    return (v * np.exp(1j * w)) @ v.conj().T


def unitary_to_theta(u: np.ndarray) -> np.ndarray:
    """Inverse of :func:`gate_unitary` (principal branch, via complex Schur form)."""
    t, z = schur(np.asarray(u, dtype=complex), output="complex")
    gen = (z * np.angle(np.diag(t))) @ z.conj().T
    return np.einsum("aij,ji->a", PAULI_BASIS, gen).real / 4.0


@dataclass
class ParamPath:
    num_qubits: int
    supports: list[tuple[int, int]]
    theta: np.ndarray

    def __post_init__(self):
        self.supports = [tuple(sorted(int(q) for q in s)) for s in self.supports]
        self.theta = np.asarray(self.theta, dtype=float).reshape(len(self.supports), 16)
        for a, b in self.supports:
            if a == b or not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise InputError(f"invalid gate pair {(a, b)}")

    @property
    def m(self) -> int:
        return len(self.supports)

    @classmethod
    def from_path(cls, path: TraversalPath) -> "ParamPath":
        """Lift an explicit path; single-qubit gates are padded with an identity neighbour."""
        if path.num_qubits < 2:
            raise InputError("two-qubit parameterization needs at least two qubits")
        supports, thetas = [], []
        for g in path.gates:
            if len(g.support) == 1:
                q = g.support[0]
                partner = q + 1 if q + 1 < path.num_qubits else q - 1
                if partner > q:
                    supports.append((q, partner))
                    u = np.kron(np.eye(2), g.unitary)
                else:
                    supports.append((partner, q))
                    u = np.kron(g.unitary, np.eye(2))
            else:
                a, b = g.support
                u = g.unitary if a < b else _SWAP @ g.unitary @ _SWAP
                supports.append((min(a, b), max(a, b)))
            thetas.append(unitary_to_theta(u))
        return cls(path.num_qubits, supports, np.array(thetas).reshape(-1, 16))


def brickwork_schedule(n: int, m: int) -> list[tuple[int, int]]:
    """Even bonds, then odd bonds, repeated until ``m`` pairs."""
    if n < 2:
        raise InputError("brickwork needs at least two qubits")
    layer = [(q, q + 1) for q in range(0, n - 1, 2)] + [(q, q + 1) for q in range(1, n - 1, 2)]
    return [layer[i % len(layer)] for i in range(m)]


def materialize(p: ParamPath) -> TraversalPath:
    return TraversalPath(p.num_qubits, tuple(Gate(s, gate_unitary(t), "raw") for s, t in zip(p.supports, p.theta)))


@dataclass
class OptimizerConfig:
    m: int | None = None
    restarts: int = 4
    max_steps: int = 200
    lr: float = 0.1
    lr_grow: float = 1.5
    lr_shrink: float = 0.5
    min_lr: float = 1e-10
    armijo: float = 1e-4
    gtol: float = 1e-7
    tau: float | None = None
    endpoint_weight: float = 10.0
    seed: int = 0
    gradient: str = "analytic"
    h: float = 1e-5
    init_scale: float = 0.5
    schedule: list[tuple[int, int]] | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.tau is not None and self.tau <= 0:
            raise InputError("temperature tau must be positive")
        if self.endpoint_weight <= 0:
            raise InputError("endpoint weight must be positive")
        if not 1e-7 <= self.h <= 1e-3:
            raise InputError("finite-difference step h must lie in [1e-7, 1e-3]")
        if self.gradient not in ("analytic", "fd"):
            raise InputError("gradient mode must be 'analytic' or 'fd'")
        if self.restarts < 1:
            raise InputError("need at least one restart")
        if self.schedule is not None:
            self.schedule = [tuple(s) for s in self.schedule]

    def resolved_tau(self, inst: CgsconInstance) -> float:
        if self.tau is not None:
            return self.tau
        return 0.01 * inst.beta if inst.beta else 0.01

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["schedule"] is not None:
            d["schedule"] = [list(s) for s in d["schedule"]]
        return d


class _Problem:
    def __init__(self, inst: CgsconInstance, supports: Sequence[tuple[int, int]], tau: float, weight: float):
        self.inst = inst
        self.n = inst.num_qubits
        self.supports = list(supports)
        self.tau = tau
        self.weight = weight
        self.psi0 = simulate(inst.prep_psi).amplitudes
        self.target = simulate(inst.prep_phi).amplitudes
        self.start_energy = inst.H.expectation(self.psi0)

    def forward(self, theta: np.ndarray, keep: bool = False):
        n, H = self.n, self.inst.H
        psi = self.psi0
        states, hstates, energies, eig = [psi], [], [], []
        for s, t in zip(self.supports, theta):
            w, v = _eig_generator(t)
            u = (v * np.exp(1j * w)) @ v.conj().T
            psi = apply_matrix(psi, u, s, n)
            hpsi = H.apply(psi)
            energies.append(float(np.vdot(psi, hpsi).real))
            if keep:
                states.append(psi)
                hstates.append(hpsi)
                eig.append((w, v, u))
        eps2 = float(np.vdot(self.target - psi, self.target - psi).real)
        return psi, np.array(energies), eps2, states, hstates, eig

    def value(self, energies: np.ndarray, eps2: float) -> float:
        e = energies if energies.size else np.array([self.start_energy])
        return self.weight * eps2 + self.tau * float(logsumexp(e / self.tau))

    def objective(self, theta: np.ndarray) -> float:
        _, energies, eps2, *_ = self.forward(theta)
        return self.value(energies, eps2)

    def value_and_grad(self, theta: np.ndarray):
        psi_m, energies, eps2, states, hstates, eig = self.forward(theta, keep=True)
        f = self.value(energies, eps2)
        m = len(self.supports)
        grad = np.zeros((m, 16))
        if m == 0:
            return f, grad, energies, eps2
        p = softmax(energies / self.tau)
        lam = p[-1] * hstates[-1] + self.weight * (psi_m - self.target)
        for i in range(m - 1, -1, -1):
            w, v, u = eig[i]
            s = self.supports[i]
            # M = Tr_rest |ψ_{i-1}><λ_i| so that <λ_i|dU ψ_{i-1}> = tr(dU M)
            M = _grouped(states[i], s, self.n) @ _grouped(lam, s, self.n).conj().T
            K = v.conj().T @ M @ v
            ew = np.exp(1j * w)
            diff = w[:, None] - w[None, :]
            close = np.abs(diff) < 1e-12
            F = np.where(close, 1j * ew[:, None], (ew[:, None] - ew[None, :]) / np.where(close, 1.0, diff))
            bt = np.einsum("ij,ajk,kl->ail", v.conj().T, PAULI_BASIS, v)
            grad[i] = 2.0 * np.einsum("ajk,jk,kj->a", bt, F, K).real
            if i > 0:
                lam = p[i - 1] * hstates[i - 1] + apply_matrix(lam, u.conj().T, s, self.n)
        return f, grad, energies, eps2

    def fd_grad(self, theta: np.ndarray, h: float) -> np.ndarray:
        grad = np.zeros_like(theta)
        for idx in np.ndindex(theta.shape):
            tp, tm = theta.copy(), theta.copy()
            tp[idx] += h
            tm[idx] -= h
            grad[idx] = (self.objective(tp) - self.objective(tm)) / (2 * h)
        return grad


def _problem(inst: CgsconInstance, p: ParamPath, cfg: OptimizerConfig) -> _Problem:
    if p.num_qubits != inst.num_qubits:
        raise InputError("parameterized path does not match the instance register")
    return _Problem(inst, p.supports, cfg.resolved_tau(inst), cfg.endpoint_weight)


def objective(inst: CgsconInstance, p: ParamPath, cfg: OptimizerConfig | None = None) -> float:
    cfg = OptimizerConfig() if cfg is None else cfg
    return _problem(inst, p, cfg).objective(p.theta)


def objective_and_gradient(inst: CgsconInstance, p: ParamPath, cfg: OptimizerConfig | None = None):
    """Objective value and its analytic gradient with respect to ``p.theta``."""
    cfg = OptimizerConfig() if cfg is None else cfg
    f, g, *_ = _problem(inst, p, cfg).value_and_grad(p.theta)
    return f, g


def finite_difference_gradient(inst: CgsconInstance, p: ParamPath, cfg: OptimizerConfig | None = None) -> np.ndarray:
    cfg = OptimizerConfig() if cfg is None else cfg
    return _problem(inst, p, cfg).fd_grad(p.theta, cfg.h)


@dataclass
class OptimizeResult:
    best: ParamPath
    trace: PathTrace
    best_restart: int
    runs: list[dict]
    log: list[list[dict]] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "best_restart": self.best_restart,
            "trace": self.trace.to_dict(),
            "runs": self.runs,
            "log": self.log,
            "best": {
                "num_qubits": self.best.num_qubits,
                "supports": [list(s) for s in self.best.supports],
                "theta": self.best.theta.tolist(),
            },
        }


def _run(prob: _Problem, theta: np.ndarray, cfg: OptimizerConfig):
    def grad_of(t):
        f, g, energies, eps2 = prob.value_and_grad(t)
        if cfg.gradient == "fd":
            g = prob.fd_grad(t, cfg.h)
        return f, g, energies, eps2

    def score(energies, eps2):
        e = float(energies.max()) if energies.size else prob.start_energy
        return max(math.sqrt(eps2), e)

    f, g, energies, eps2 = grad_of(theta)
    best_theta, best_score = theta.copy(), score(energies, eps2)
    lr = cfg.lr
    log = [{"step": 0, "objective": f, "score": best_score, "lr": lr}]
    converged = False
    for step in range(1, cfg.max_steps + 1):
        gsq = float(np.sum(g * g))
        if math.sqrt(gsq) < cfg.gtol:
            converged = True
            break
        while lr >= cfg.min_lr:
            cand = theta - lr * g
            fc = prob.objective(cand)
            if fc <= f - cfg.armijo * lr * gsq:
                break
            lr *= cfg.lr_shrink
        else:
            converged = True  # no descent step left at this resolution
            break
        theta = cand
        f, g, energies, eps2 = grad_of(theta)
        sc = score(energies, eps2)
        if sc < best_score:
            best_theta, best_score = theta.copy(), sc
        log.append({"step": step, "objective": f, "score": sc, "lr": lr})
        lr *= cfg.lr_grow
    return best_theta, best_score, converged, log


def optimize(inst: CgsconInstance, cfg: OptimizerConfig | None = None, init: ParamPath | None = None) -> OptimizeResult:
    """Gradient descent with backtracking line search, from ``cfg.restarts`` starts.

    Restart 0 starts from ``init`` when given; the others from seeded random
    angles.  The best run is the one with the lowest exact score
    ``max{ε, max_i E_i}`` over all visited iterates (ties: lowest restart index).
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    if init is not None:
        supports = init.supports
    elif cfg.schedule is not None:
        m = len(cfg.schedule) if cfg.m is None else cfg.m
        supports = [cfg.schedule[i % len(cfg.schedule)] for i in range(m)]
    else:
        m = inst.m_max if cfg.m is None else cfg.m
        supports = brickwork_schedule(inst.num_qubits, m)
    if len(supports) > inst.m_max:
        raise InputError(f"path length {len(supports)} exceeds budget m_max={inst.m_max}")
    if any(max(s) >= inst.num_qubits for s in supports):
        raise InputError("gate pair outside the instance register")
    prob = _Problem(inst, supports, cfg.resolved_tau(inst), cfg.endpoint_weight)

    def start(idx: int) -> np.ndarray:
        if idx == 0 and init is not None:
            return init.theta.copy()
        rng = np.random.default_rng([cfg.seed, idx])
        return cfg.init_scale * rng.normal(size=(len(supports), 16))

    def job(idx):
        return _run(prob, start(idx), cfg)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(job, range(cfg.restarts)))
    else:
        results = [job(i) for i in range(cfg.restarts)]

    best_idx = min(range(len(results)), key=lambda i: (results[i][1], i))
    runs, logs = [], []
    for i, (theta, sc, conv, log) in enumerate(results):
        tr = evaluate_path(inst, materialize(ParamPath(inst.num_qubits, supports, theta)), retain=False)
        runs.append({"restart": i, "score": tr.score, "epsilon": tr.epsilon, "max_energy": tr.max_energy,
                     "delta": tr.delta, "converged": conv, "steps": len(log) - 1})
        logs.append(log)
    best = ParamPath(inst.num_qubits, supports, results[best_idx][0])
    trace = evaluate_path(inst, materialize(best))
    return OptimizeResult(best, trace, best_idx, runs, logs)
