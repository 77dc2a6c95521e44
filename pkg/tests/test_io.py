import json
import warnings

import numpy as np
import pytest

from qcw import io as qio
from qcw.circuits import CNOT, Circuit, H, T
from qcw.errors import InputError, LayoutError
from qcw.hamiltonian import LayeredHamiltonian
from qcw.random_instances import perturbed_path, random_psd_hamiltonian, yes_instance
from qcw.reductions import PromiseGapWarning, two_layer_to_cgscon


def roundtrip(obj):
    doc = qio.to_document(obj, "test", {"seed": 1})
    text = qio.dumps(doc)
    back = qio.from_document(qio.loads(text))
    assert qio.dumps(qio.to_document(back, "test", {"seed": 1})) == text
    return back


def test_complex_matrix_encoding(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    np.testing.assert_array_equal(qio.decode_matrix(json.loads(json.dumps(qio.encode_matrix(m)))), m)


def test_circuit_round_trip():
    c = Circuit(3, (H(0), CNOT(0, 2), T(1)))
    back = roundtrip(c)
    assert [g.name for g in back.gates] == ["H", "CNOT", "T"]
    assert [g.support for g in back.gates] == [(0,), (0, 2), (1,)]


def test_hamiltonian_round_trip(rng):
    H_ = random_psd_hamiltonian(3, rng)
    back = roundtrip(H_)
    assert isinstance(back, LayeredHamiltonian) and len(back.layers) == len(H_.layers)
    for a, b in zip(H_.terms, back.terms):
        assert a.coefficient == b.coefficient
        np.testing.assert_array_equal(a.factors[0].matrix, b.factors[0].matrix)


def test_cgscon_and_path_round_trip(rng):
    t, prep = yes_instance(2, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromiseGapWarning)
        inst = two_layer_to_cgscon(t, 12)
    back = roundtrip(inst)
    assert back.layout.n == 2 and back.source.alpha == t.alpha and back.c == inst.c
    doc = qio.to_document(inst)
    assert doc["layout"]["registers"]["third"] == [5, 6, 7]
    path = perturbed_path(inst, rng, extra=2)
    back_path = roundtrip(path)
    for a, b in zip(path.gates, back_path.gates):
        np.testing.assert_array_equal(a.unitary, b.unitary)


def test_two_layer_round_trip(rng):
    t, _ = yes_instance(2, rng)
    back = roundtrip(t)
    assert back.beta == t.beta and back.metadata == {"kind": "yes"}


def test_malformed_json_rejected():
    with pytest.raises(qio.MalformedJSON):
        qio.loads("{")


def test_schema_violation_rejected():
    doc = qio.to_document(Circuit(1, (H(0),)))
    doc["data"]["gates"][0]["matrix"][0][0] = [1.0]
    with pytest.raises(qio.SchemaError):
        qio.loads(json.dumps(doc))
    doc = qio.to_document(Circuit(1, ()))
    doc["format_version"] = "0.9"
    with pytest.raises(qio.SchemaError):
        qio.loads(json.dumps(doc))


def test_layout_mismatch_rejected():
    doc = qio.to_document(Circuit(2, ()))
    doc["layout"]["num_qubits"] = 3
    with pytest.raises(LayoutError):
        qio.from_document(qio.loads(json.dumps(doc)))


def test_kind_mismatch(tmp_path):
    p = tmp_path / "c.json"
    qio.save_object(p, Circuit(1, ()))
    with pytest.raises(InputError):
        qio.load_object(p, "hamiltonian")


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "f.json"
    qio.write_atomic(p, "a")
    qio.write_atomic(p, "b")
    assert p.read_text() == "b" and [x.name for x in tmp_path.iterdir()] == ["f.json"]
