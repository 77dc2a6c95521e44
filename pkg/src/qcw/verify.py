"""Path evaluation and numerical certification of the traversal inequalities."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .circuits import Gate, simulate
from .errors import CapError, InputError, LayoutError
from .hamiltonian import LayeredHamiltonian
from .qstate import ATOL, MAX_FACTOR_QUBITS, OperatorFactor, StateVector, apply_matrix, embed_matrix, partial_trace_outer
from .reductions import P0, P01, P1, P10, PI, CgsconInstance, RegisterLayout, TraversalPath
from .spectra import ground_energy_dense, ground_energy_iterative

SLACK = 1e-9
RETAIN_MAX_QUBITS = 14
KORTH_MAX_QUBITS = 20

__all__ = [
    "PathTrace",
    "SubspaceQuad",
    "SmallProjectionReport",
    "TraversalReport",
    "ETermReport",
    "evaluate_path",
    "check_k_orthogonal",
    "subspaces_k_orthogonal",
    "check_small_projection",
    "check_modified_traversal",
    "soundness_bound",
    "e_term_bound_check",
    "theorem_pair",
    "theorem_quad",
    "verify_lemmas",
]


def _amps(s) -> np.ndarray:
    return s.amplitudes if isinstance(s, StateVector) else np.asarray(s)


def _apply_proj(p: OperatorFactor, amps: np.ndarray, n: int) -> np.ndarray:
    return apply_matrix(amps, p.matrix, p.support, n)


# ---------------------------------------------------------------------------
# path evaluation


@dataclass
class PathTrace:
    energies: list[float]
    epsilon: float
    delta: float
    max_energy: float
    m: int
    start_energy: float
    yes_witness: bool
    states: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def score(self) -> float:
        return max(self.epsilon, self.max_energy)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "energies": list(self.energies),
            "start_energy": self.start_energy,
            "max_energy": self.max_energy,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "score": self.score,
            "yes_witness": self.yes_witness,
        }


def _check_path(inst: CgsconInstance, path: TraversalPath) -> None:
    if path.num_qubits != inst.num_qubits:
        raise LayoutError(f"path acts on {path.num_qubits} qubits, instance on {inst.num_qubits}")
    if len(path) > inst.m_max:
        raise InputError(f"path length {len(path)} exceeds budget m_max={inst.m_max}")
    for g in path.gates:
        if len(g.support) > inst.k_unitaries:
            raise InputError(f"gate on {g.support} is more than {inst.k_unitaries}-local")


def evaluate_path(inst: CgsconInstance, path: TraversalPath, retain: bool | None = None) -> PathTrace:
    """Energies after every gate, endpoint distance ε and penalty overlap δ.

    States are kept when the register has at most 14 qubits (or ``retain``).
    """
    _check_path(inst, path)
    n = inst.num_qubits
    retain = n <= RETAIN_MAX_QUBITS if retain is None else retain
    psi = simulate(inst.prep_psi).amplitudes
    target = simulate(inst.prep_phi).amplitudes
    pen = inst.penalty

    def overlap(v):
        return 0.0 if pen is None else float(np.linalg.norm(_apply_proj(pen, v, n)))

    start_energy = inst.H.expectation(psi)
    states = [psi] if retain else None
    energies, delta = [], 0.0
    for g in path.gates:
        psi = apply_matrix(psi, g.unitary, g.support, n)
        energies.append(inst.H.expectation(psi))
        delta = max(delta, overlap(psi))
        if retain:
            states.append(psi)
    if not path.gates:
        delta = overlap(psi)
    eps = float(np.linalg.norm(target - psi))
    max_energy = max(energies) if energies else start_energy
    yes = max(eps, max_energy) <= inst.c + SLACK
    return PathTrace(energies, eps, delta, max_energy, len(path), start_energy, yes, states)


# ---------------------------------------------------------------------------
# k-orthogonality


def check_k_orthogonal(psi: StateVector, phi: StateVector, k: int, atol: float = 1e-10) -> tuple[bool, tuple[int, ...] | None]:
    """Exact test of ``<psi|U|phi> = 0`` for all ``k``-local ``U``.

    For each ``k``-subset ``S`` the overlap is ``trace(U_S M_S)`` with
    ``M_S = Tr_{not S}|phi><psi|``; it vanishes for every ``U_S`` iff ``M_S = 0``.
    Returns the verdict and the first violating subset.
    """
    if k < 1:
        raise InputError("k must be at least 1")
    if k > MAX_FACTOR_QUBITS:
        raise CapError(f"k={k} exceeds the subset cap of {MAX_FACTOR_QUBITS}")
    if psi.num_qubits > KORTH_MAX_QUBITS:
        raise CapError(f"{psi.num_qubits} qubits exceeds the enumeration cap of {KORTH_MAX_QUBITS}")
    size = min(k, psi.num_qubits)
    for subset in itertools.combinations(range(psi.num_qubits), size):
        if np.linalg.norm(partial_trace_outer(psi, phi, subset)) > atol:
            return False, subset
    return True, None


def _rank_one_vector(mat: np.ndarray) -> np.ndarray | None:
    w, v = np.linalg.eigh(mat)
    if np.sum(np.abs(w) > 1e-9) == 1 and abs(w[-1] - 1.0) <= 1e-9:
        return v[:, -1]
    return None


def _sandwich_norm(p_left: OperatorFactor, u: np.ndarray, u_support: Sequence[int], p_right: OperatorFactor) -> float:
    """Frobenius norm of ``P_left U P_right`` on the union of the supports.

    Only ever compared against zero, and it bounds the operator norm from above.
    """
    union = sorted(set(p_left.support) | set(p_right.support) | set(u_support))
    op = (
        embed_matrix(p_left.matrix, p_left.support, union)
        @ embed_matrix(u, u_support, union)
        @ embed_matrix(p_right.matrix, p_right.support, union)
    )
    return float(np.linalg.norm(op))


def subspaces_k_orthogonal(
    p_s: OperatorFactor,
    p_t: OperatorFactor,
    k: int,
    num_qubits: int,
    samples: int = 200,
    seed: int = 0,
) -> tuple[bool, str]:
    """k-orthogonality of the ranges of two embedded projectors.

    When both are rank one on their joint support the exact subset criterion
    applies; otherwise ``samples`` random ``k``-local Haar unitaries are drawn
    and ``||P_T U P_S||`` must vanish for each.
    """
    joint = sorted(set(p_s.support) | set(p_t.support))
    vs = _rank_one_vector(embed_matrix(p_s.matrix, p_s.support, joint))
    vt = _rank_one_vector(embed_matrix(p_t.matrix, p_t.support, joint))
    if vs is not None and vt is not None:
        ok, subset = check_k_orthogonal(StateVector(len(joint), vs), StateVector(len(joint), vt), k)
        return ok, "exact" if ok else f"exact: subset {tuple(joint[q] for q in subset)}"
    rng = np.random.default_rng(seed)
    size = min(k, num_qubits)
    for _ in range(samples):
        sub = tuple(int(q) for q in rng.choice(num_qubits, size=size, replace=False))
        u = unitary_group.rvs(2**size, random_state=rng) if size > 1 else unitary_group.rvs(2, random_state=rng)
        if _sandwich_norm(p_t, u, sub, p_s) > 1e-10:
            return False, f"sampled: unitary on {sub}"
    return True, f"sampled ({samples})"


def _gate_failures(p_s: OperatorFactor, p_t: OperatorFactor, gates: Sequence[Gate] | None, k: int) -> list[str]:
    out = []
    proj_support = set(p_s.support) | set(p_t.support)
    disjoint_ok = _sandwich_norm(p_t, np.eye(1), (), p_s) <= 1e-10
    for i, g in enumerate(gates or (), start=1):
        if len(g.support) > k:
            out.append(f"gate {i} on {g.support} is {len(g.support)}-local (> {k})")
        if disjoint_ok and not proj_support & set(g.support):
            continue
        if _sandwich_norm(p_t, g.unitary, g.support, p_s) > 1e-10:
            out.append(f"gate {i} on {g.support} maps S into T")
    return out


# ---------------------------------------------------------------------------
# projector bundles


@dataclass(frozen=True)
class SubspaceQuad:
    P_S: OperatorFactor
    P_T: OperatorFactor
    P_U: OperatorFactor
    P_V: OperatorFactor

    def validate(self) -> list[str]:
        problems = []
        for name in ("P_S", "P_T", "P_U", "P_V"):
            m = getattr(self, name).matrix
            if np.max(np.abs(m @ m - m)) > ATOL or np.max(np.abs(m - m.conj().T)) > ATOL:
                problems.append(f"{name} is not an orthogonal projector")

        def prod(a, b):
            union = sorted(set(a.support) | set(b.support))
            ea, eb = embed_matrix(a.matrix, a.support, union), embed_matrix(b.matrix, b.support, union)
            return ea @ eb, eb

        st, _ = prod(self.P_S, self.P_T)
        uv, _ = prod(self.P_U, self.P_V)
        us, s = prod(self.P_U, self.P_S)
        ut, t = prod(self.P_U, self.P_T)
        if np.max(np.abs(st)) > ATOL:
            problems.append("P_S P_T != 0")
        if np.max(np.abs(uv)) > ATOL:
            problems.append("P_U P_V != 0")
        if np.max(np.abs(us - s)) > ATOL or np.max(np.abs(ut - t)) > ATOL:
            problems.append("S ∪ T is not contained in U")
        return problems


def theorem_pair(layout: RegisterLayout) -> tuple[OperatorFactor, OperatorFactor]:
    """``I⊗I⊗P0`` and ``I⊗I⊗P1`` (third register)."""
    return layout.factor(3, P0), layout.factor(3, P1)


def theorem_quad(layout: RegisterLayout) -> SubspaceQuad:
    eye = np.eye(8)
    return SubspaceQuad(
        P_S=layout.pair_factor(P0, P0),
        P_T=layout.pair_factor(P1, P0),
        P_U=layout.pair_factor(eye, P0),
        P_V=layout.pair_factor(eye, P1),
    )


# ---------------------------------------------------------------------------
# lemma checks


@dataclass
class SmallProjectionReport:
    precondition_ok: bool
    precondition_failures: list[str]
    t_norms: list[float]
    s_norms: list[float]
    t_ok: list[bool]
    s_ok: list[bool]
    zeta: float

    @property
    def holds(self) -> bool:
        return all(self.t_ok) and all(self.s_ok)

    @property
    def first_violation(self) -> int | None:
        for i, (a, b) in enumerate(zip(self.t_ok, self.s_ok)):
            if not (a and b):
                return i
        return None

    def to_dict(self) -> dict:
        return {
            "precondition_ok": self.precondition_ok,
            "precondition_failures": self.precondition_failures,
            "holds": self.holds,
            "first_violation": self.first_violation,
            "zeta": self.zeta,
            "t_norms": self.t_norms,
            "s_norms": self.s_norms,
        }


def check_small_projection(
    P_S: OperatorFactor,
    P_T: OperatorFactor,
    states: Sequence,
    zeta: float,
    gates: Sequence[Gate] | None = None,
    k: int = 2,
    samples: int = 200,
    seed: int = 0,
) -> SmallProjectionReport:
    """``||P_T ψ_i|| <= iζ`` and ``||P_S ψ_i|| >= 1-(i+1)ζ`` for ``i = 0..m``.

    Preconditions (reported, never raised): ``ψ_0 ∈ S``, ``||Πψ_i|| <= ζ`` with
    ``Π = I - P_S - P_T``, ``S`` and ``T`` k-orthogonal, and -- when gates are
    given -- every gate ``k``-local with ``P_T U P_S = 0``.
    """
    amps = [_amps(s) for s in states]
    n = int(np.log2(amps[0].shape[0]))
    failures = []
    ps = [_apply_proj(P_S, a, n) for a in amps]
    pt = [_apply_proj(P_T, a, n) for a in amps]
    if np.linalg.norm(ps[0] - amps[0]) > 1e-10:
        failures.append("initial state not in S")
    for i, a in enumerate(amps):
        if np.linalg.norm(a - ps[i] - pt[i]) > zeta + SLACK:
            failures.append(f"||Π ψ_{i}|| exceeds ζ")
            break
    ok, how = subspaces_k_orthogonal(P_S, P_T, k, n, samples, seed)
    if not ok:
        failures.append(f"S and T not {k}-orthogonal ({how})")
    failures += _gate_failures(P_S, P_T, gates, k)

    t_norms = [float(np.linalg.norm(v)) for v in pt]
    s_norms = [float(np.linalg.norm(v)) for v in ps]
    t_ok = [t <= i * zeta + SLACK for i, t in enumerate(t_norms)]
    s_ok = [s >= 1 - (i + 1) * zeta - SLACK for i, s in enumerate(s_norms)]
    return SmallProjectionReport(not failures, failures, t_norms, s_norms, t_ok, s_ok, float(zeta))


@dataclass
class TraversalReport:
    precondition_ok: bool
    precondition_failures: list[str]
    witness_index: int
    lhs: float
    rhs: float
    overlaps: list[float]

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - SLACK

    def to_dict(self) -> dict:
        return {
            "precondition_ok": self.precondition_ok,
            "precondition_failures": self.precondition_failures,
            "holds": self.holds,
            "witness_index": self.witness_index,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


def check_modified_traversal(
    q: SubspaceQuad,
    states: Sequence,
    epsilon: float,
    delta: float,
    phi=None,
    gates: Sequence[Gate] | None = None,
    k: int = 2,
    samples: int = 200,
    seed: int = 0,
) -> TraversalReport:
    """Find ``i`` maximizing ``||Pψ_i||²`` with ``P = P_U - P_S - P_T`` and compare to
    ``((1-ε)/m)² - 2(m+1)δ``.
    """
    amps = [_amps(s) for s in states]
    m = len(amps) - 1
    if m < 1:
        raise InputError("need at least one unitary")
    n = int(np.log2(amps[0].shape[0]))
    failures = list(q.validate())
    if not 0.0 <= epsilon <= 1.0:
        failures.append("epsilon outside [0, 1]")
    if np.linalg.norm(_apply_proj(q.P_S, amps[0], n) - amps[0]) > 1e-10:
        failures.append("initial state not in S")
    if phi is not None:
        phi = _amps(phi)
        if np.linalg.norm(_apply_proj(q.P_T, phi, n) - phi) > 1e-10:
            failures.append("target state not in T")
        if np.linalg.norm(phi - amps[-1]) > epsilon + 1e-12:
            failures.append("final distance exceeds epsilon")
    for i in range(1, m + 1):
        pu = _apply_proj(q.P_U, amps[i], n)
        pv = _apply_proj(q.P_V, amps[i], n)
        if np.linalg.norm(amps[i] - pu - pv) > delta + 1e-12:
            failures.append(f"||Π ψ_{i}|| exceeds δ")
            break
    for a, b, label in ((q.P_S, q.P_T, "S,T"), (q.P_U, q.P_V, "U,V")):
        ok, how = subspaces_k_orthogonal(a, b, k, n, samples, seed)
        if not ok:
            failures.append(f"{label} not {k}-orthogonal ({how})")
    failures += _gate_failures(q.P_S, q.P_T, gates, k)
    failures += _gate_failures(q.P_U, q.P_V, gates, k)

    overlaps = [0.0]
    for a in amps[1:]:
        p = _apply_proj(q.P_U, a, n) - _apply_proj(q.P_S, a, n) - _apply_proj(q.P_T, a, n)
        overlaps.append(float(np.vdot(p, p).real))
    witness = 1 + int(np.argmax(overlaps[1:]))
    rhs = ((1 - epsilon) / m) ** 2 - 2 * (m + 1) * delta
    return TraversalReport(not failures, sorted(set(failures), key=failures.index), witness, overlaps[witness], rhs, overlaps)


def soundness_bound(beta: float, m: int, epsilon: float, delta: float) -> float:
    """``max{δ², (β/2)(((1-ε)/m)² - 2(m+1)δ) - 2mδ}``, clamped at zero."""
    if not 0.0 < beta <= 2.0:
        raise InputError(f"beta must lie in (0, 2], got {beta}")
    if not 0.0 <= epsilon <= 1.0:
        raise InputError(f"epsilon must lie in [0, 1], got {epsilon}")
    if m < 1:
        raise InputError("m must be at least 1")
    if delta < 0:
        raise InputError("delta must be nonnegative")
    second = (beta / 2) * (((1 - epsilon) / m) ** 2 - 2 * (m + 1) * delta) - 2 * m * delta
    return max(0.0, delta**2, second)


@dataclass
class ETermReport:
    values: list[float]
    bound: float
    index: int | None

    @property
    def holds(self) -> bool:
        vals = self.values if self.index is None else [self.values[self.index]]
        return all(abs(v) <= self.bound + SLACK for v in vals)

    def to_dict(self) -> dict:
        return {"values": self.values, "bound": self.bound, "index": self.index, "holds": self.holds}


def e_term_bound_check(
    states: Sequence,
    A: LayeredHamiltonian,
    B: LayeredHamiltonian,
    delta: float,
    m: int | None = None,
    layout: RegisterLayout | None = None,
    index: int | None = None,
) -> ETermReport:
    """``E = ½[<(A-B)⊗Π⊗P01> + <(A-B)⊗Π⊗P10> + <(A+B)⊗Π⊗P1>]`` against ``2mδ``.

    ``index`` restricts the assertion to one state; values are reported for all.
    """
    amps = [_amps(s) for s in states]
    m = len(amps) - 1 if m is None else m
    layout = RegisterLayout(A.num_qubits) if layout is None else layout
    n = layout.num_qubits
    if A.num_qubits != layout.n or B.num_qubits != layout.n or amps[0].shape[0] != 2**n:
        raise LayoutError("states and A, B do not match the three-register layout")
    Ap, Bp = A.padded(n), B.padded(n)
    values = []
    for a in amps:
        y = apply_matrix(a, PI, layout.reg2, n)
        flip = apply_matrix(y, P01 + P10, layout.reg3, n)
        keep = apply_matrix(y, P1, layout.reg3, n)
        e = np.vdot(a, Ap.apply(flip) - Bp.apply(flip)) + np.vdot(a, Ap.apply(keep) + Bp.apply(keep))
        values.append(float(0.5 * e.real))
    return ETermReport(values, 2 * m * delta, index)


# ---------------------------------------------------------------------------


def certified_beta(inst: CgsconInstance) -> float | None:
    """Smallest eigenvalue of ``A + B`` for instances carrying their two-layer source."""
    if inst.source is None:
        return None
    A, B = inst.source.A, inst.source.B
    total = LayeredHamiltonian(A.num_qubits, (A.terms + B.terms,))
    if total.num_qubits <= 10:
        return ground_energy_dense(total).value
    res = ground_energy_iterative(total, tol=1e-10)
    return res.value if res.converged else None


def verify_lemmas(inst: CgsconInstance, path: TraversalPath, samples: int = 200, seed: int = 0) -> dict:
    """All inequality checks along one path on an instance with the three-register layout."""
    if inst.layout is None:
        raise LayoutError("lemma checks need the three-register layout")
    trace = evaluate_path(inst, path, retain=True)
    states = trace.states
    target = simulate(inst.prep_phi).amplitudes
    out: dict = {"trace": trace.to_dict()}
    if trace.m == 0:
        out["note"] = "empty path: lemma checks need at least one unitary"
        return out
    p_s, p_t = theorem_pair(inst.layout)
    sp = check_small_projection(p_s, p_t, states, trace.delta, path.gates, inst.k_unitaries, samples, seed)
    out["small_projection"] = sp.to_dict()
    quad = theorem_quad(inst.layout)
    eps = min(trace.epsilon, 1.0)
    mt = check_modified_traversal(quad, states, eps, trace.delta, target, path.gates, inst.k_unitaries, samples, seed)
    out["modified_traversal"] = mt.to_dict()
    if inst.source is not None:
        et = e_term_bound_check(states, inst.source.A, inst.source.B, trace.delta, trace.m, inst.layout, mt.witness_index)
        out["e_term"] = et.to_dict()
        lam = certified_beta(inst)
        beta = inst.source.beta
        certified = lam is not None and lam >= beta - 1e-12
        entry = {"beta": beta, "lambda_min_A_plus_B": lam, "certified": certified,
                 "applicable": certified and trace.epsilon <= 0.5 and 0 < beta <= 2}
        if entry["applicable"]:
            bound = soundness_bound(beta, trace.m, trace.epsilon, trace.delta)
            entry.update(bound=bound, holds=trace.max_energy >= bound - SLACK)
        out["soundness"] = entry
    return out
