import warnings

import numpy as np
import pytest

from oracles import hamiltonian_dense, kitaev_dense
from qcw.circuits import CNOT, Circuit, H, X, random_circuit, simulate, swap_normalize
from qcw.errors import InputError
from qcw.hamiltonian import LayeredHamiltonian, LocalTerm, TwoLayerInstance, check_layered, degree_profile
from qcw.qstate import OperatorFactor, StateVector, basis_state, random_state
from qcw.random_instances import random_commuting_layers, yes_instance
from qcw.reductions import (
    PMINUS,
    PPLUS,
    PromiseGapWarning,
    completeness_path,
    gamma_extend,
    history_state,
    kitaev_54,
    layer_54,
    layer_terms,
    two_layer_to_cgscon,
)
from qcw.spectra import ground_energy_dense
from qcw.verify import evaluate_path

# dense ground energy of the clock Hamiltonian for H, X, H on witness qubit 1
# with the output read from the untouched qubit 0 (oracle: tests/oracles.kitaev_dense)
REJECT_GROUND_ENERGY = 0.019030116872178194


def proj(support, diag):
    return OperatorFactor(tuple(support), np.diag(diag).astype(complex), hermitian=True)


def test_single_x_history_energy_zero():
    ch = kitaev_54(Circuit(1, (X(0),)))
    psi = history_state(ch)
    assert ch.hamiltonian.expectation(psi.amplitudes) == pytest.approx(0, abs=1e-12)
    assert ground_energy_dense(ch.hamiltonian).value == pytest.approx(0, abs=1e-12)


def test_kitaev_matches_dense_oracle(rng):
    for _ in range(10):
        c = random_circuit(2, int(rng.integers(1, 4)), rng)
        c, _ = swap_normalize(c)
        if c.num_qubits + len(c) > 8:
            continue
        witness = (1,) if rng.random() < 0.5 else ()
        ch = kitaev_54(c, witness, 0)
        ref = kitaev_dense([(g.support, g.unitary) for g in c.gates], c.num_qubits, witness, 0)
        np.testing.assert_allclose(hamiltonian_dense(ch.hamiltonian), ref, atol=1e-12)


def test_accepting_circuit_ground_energy_zero():
    # output qubit 0 ends in |1> for every witness on qubit 1
    c = Circuit(2, (H(1), X(0), H(1)))
    ch = kitaev_54(c, witness_qubits=(1,), output_qubit=0)
    assert ground_energy_dense(ch.hamiltonian).value == pytest.approx(0, abs=1e-10)


def test_rejecting_circuit_ground_energy():
    c = Circuit(2, (H(1), X(1), H(1)))
    ch = kitaev_54(c, witness_qubits=(1,), output_qubit=0)
    e = ground_energy_dense(ch.hamiltonian).value
    assert e >= 1e-3
    assert e == pytest.approx(REJECT_GROUND_ENERGY, abs=1e-12)


def test_propagation_terms_annihilate_history(rng):
    for _ in range(10):
        c, _ = swap_normalize(random_circuit(2, int(rng.integers(1, 4)), rng))
        if c.num_qubits + len(c) > 9:
            continue
        ch = kitaev_54(c, witness_qubits=(1,))
        w = random_state(1, rng)
        psi = history_state(ch, w).amplitudes
        n = ch.num_qubits
        prop = [t for t in ch.hamiltonian.terms if len(t.factors) == 1]  # the others are projector pairs
        for t in prop:
            assert abs(np.vdot(psi, t.apply(psi, n))) < 1e-10
        assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_history_state_without_gates():
    psi = history_state(Circuit(2, ()), basis_state("1"), (1,))
    assert psi.num_qubits == 2 and psi.amplitudes[2] == 1


def test_kitaev_rejects_unnormalized_circuit():
    c = Circuit(1, (X(0), X(0), X(0), X(0)))
    with pytest.raises(InputError):
        kitaev_54(c)


def test_kitaev_data_degree_at_most_four(rng):
    for _ in range(10):
        c, loc = swap_normalize(random_circuit(3, 8, rng), output=0)
        ch = kitaev_54(c, output_qubit=loc[0])
        prof = degree_profile(ch.hamiltonian)
        assert max(prof.degrees[: c.num_qubits]) <= 4


def test_kitaev_families():
    ch = kitaev_54(Circuit(2, (X(0), CNOT(0, 1))), witness_qubits=(1,))
    assert ch.families == {"input": 1, "output": 1, "propagation": 2, "clock": 1}


def _five_local_hamiltonian(rng):
    terms = []
    for s in [(0, 1, 2, 3, 4), (1, 2, 3, 4, 5), (0, 2, 3, 4, 5), (0, 1)]:
        d = 2 ** len(s)
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = g @ g.conj().T
        terms.append(LocalTerm((OperatorFactor(s, m / np.linalg.norm(m, 2), hermitian=True),), float(rng.random())))
    return LayeredHamiltonian.unlayered(6, terms)


def test_layering_completeness_identity(rng):
    H = _five_local_hamiltonian(rng)
    data = layer_terms(H, 1.0, levels=4)
    assert data.kappa == 2**10
    GR = LayeredHamiltonian(data.num_qubits, (data.G.terms + data.R.terms,))
    for _ in range(10):
        psi = random_state(6, rng)
        ext = gamma_extend(psi, data).amplitudes
        assert GR.expectation(ext) == pytest.approx(H.expectation(psi.amplitudes) / data.kappa, abs=1e-10)


def test_r_annihilates_gamma(rng):
    H = _five_local_hamiltonian(rng)
    data = layer_terms(H, 1.0, levels=4)
    ext = gamma_extend(random_state(6, rng), data).amplitudes
    assert data.R.expectation(ext) == pytest.approx(0, abs=1e-9)


def test_layering_soundness_one_qubit():
    # H = 0.6 P0 + 0.6 P1 = 0.6 I, so every state has energy >= s = 0.6
    H = LayeredHamiltonian.unlayered(1, [LocalTerm((proj((0,), [1, 0]),), 0.6), LocalTerm((proj((0,), [0, 1]),), 0.6)])
    b, s = 1.0, 0.6
    data = layer_terms(H, b)
    GR = LayeredHamiltonian(data.num_qubits, (data.G.terms + data.R.terms,))
    lam = ground_energy_dense(GR).value
    assert lam >= s / data.kappa - data.m ** -(b + 1) - 1e-9


def test_layer_54_outputs_commuting_layers(rng):
    H = _five_local_hamiltonian(rng)
    t = layer_54(H, 6.0, c=0.0, s=1.0, levels=4)
    assert check_layered(t.A).ok and check_layered(t.B).ok
    assert t.metadata["kappa"] == 1024 and t.alpha < t.beta


def test_layer_54_rejects_vanishing_gap():
    H = LayeredHamiltonian.unlayered(1, [LocalTerm((proj((0,), [1, 0]),), 0.5)])
    with pytest.raises(InputError):
        layer_54(H, 1.0)


def test_layer_terms_rejects_large_norm():
    H = LayeredHamiltonian.unlayered(1, [LocalTerm((proj((0,), [2, 0]),), 1.0)])
    with pytest.raises(InputError):
        layer_terms(H, 1.0)


def _instance(rng, n=3, m_max=12):
    A, B = random_commuting_layers(n, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromiseGapWarning)
        return two_layer_to_cgscon(TwoLayerInstance(A, B, 0.1, 0.5), m_max)


def test_cgscon_is_commuting_and_local(rng):
    A, B = random_commuting_layers(3, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromiseGapWarning)
        inst = two_layer_to_cgscon(TwoLayerInstance(A, B, 0.1, 0.5), 12)
    assert check_layered(inst.H).ok
    src = list(A.terms) + list(B.terms)
    for t, s in zip(inst.H.terms, src):
        assert t.locality == s.locality + 6


def test_cgscon_zero_energy_endpoints(rng):
    inst = _instance(rng)
    n = inst.layout.n
    for reg2 in ("000", "111"):
        bits = "000" + reg2 + "0" * n
        assert inst.H.expectation(basis_state(bits).amplitudes) == pytest.approx(0, abs=1e-12)


def test_cgscon_flip_energy_is_half_sum(rng):
    t, prep = yes_instance(3, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromiseGapWarning)
        inst = two_layer_to_cgscon(t, 12)
    psi = simulate(prep).amplitudes
    half = 0.5 * (t.A.expectation(psi) + t.B.expectation(psi))
    for a in range(1, 7):
        reg = np.zeros(64)
        reg[a] = 1.0  # reg3 |000>, reg2 |a>
        full = np.kron(reg, psi)
        assert inst.H.expectation(full) == pytest.approx(half, abs=1e-12)


def test_cgscon_warns_on_empty_gap(rng):
    A, B = random_commuting_layers(2, rng)
    with pytest.warns(PromiseGapWarning):
        two_layer_to_cgscon(TwoLayerInstance(A, B, 0.1, 0.5), 12)


def test_cgscon_rejects_noncommuting_layer():
    f = OperatorFactor((0,), np.array([[0.5, 0.5], [0.5, 0.5]]), hermitian=True)
    A = LayeredHamiltonian.single_layer(1, [LocalTerm((proj((0,), [1, 0]),), 0.5), LocalTerm((f,), 0.5)])
    with pytest.raises(InputError):
        two_layer_to_cgscon(TwoLayerInstance(A, A, 0.1, 0.5), 12)


def test_cgscon_budget_minimum(rng):
    A, B = random_commuting_layers(1, rng)
    with pytest.raises(InputError):
        two_layer_to_cgscon(TwoLayerInstance(A, B, 0.1, 0.5), 2)


def test_completeness_path_empty_prep(rng):
    inst = _instance(rng)
    n = inst.layout.n
    path = completeness_path(Circuit(n, ()))
    assert len(path) == 3 and all(g.name == "X" for g in path.gates)
    out = simulate(Circuit(path.num_qubits, path.gates)).amplitudes
    target = basis_state("000111" + "0" * n).amplitudes
    np.testing.assert_array_equal(out, target)


def test_completeness_path_phases(rng):
    t, prep = yes_instance(3, rng, prep_gates=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromiseGapWarning)
        inst = two_layer_to_cgscon(t, 2 * len(prep) + 3)
    path = completeness_path(prep, 3)
    assert len(path) == 2 * len(prep) + 3
    tr = evaluate_path(inst, path)
    energies = np.array(tr.energies)
    m1 = len(prep)
    assert np.all(np.abs(energies[:m1]) <= 1e-10) and np.all(np.abs(energies[m1 + 3:]) <= 1e-10)
    assert tr.max_energy <= t.alpha / 2 + 1e-10 and tr.epsilon <= 1e-10


def test_pplus_pminus_are_projectors():
    for p in (PPLUS, PMINUS):
        np.testing.assert_allclose(p @ p, p, atol=1e-15)
    assert np.allclose(PPLUS @ PMINUS, 0)


def test_history_state_rejects_mismatched_witness():
    with pytest.raises(InputError):
        history_state(Circuit(2, (X(0),)), StateVector(2, np.array([1, 0, 0, 0])), (1,))
