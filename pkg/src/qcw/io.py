"""JSON file formats.

Every document is an envelope ``{format_version, kind, layout, provenance, data}``.
Complex numbers are ``[re, im]`` pairs, matrices are row-major lists of rows,
qubit indices are 0-based with qubit 0 the least-significant bit.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .circuits import Circuit, Gate
from .errors import InputError, LayoutError
from .hamiltonian import LayeredHamiltonian, LocalTerm, TwoLayerInstance
from .qstate import OperatorFactor
from .reductions import CgsconInstance, RegisterLayout, TraversalPath

FORMAT_VERSION = "1.0"
KINDS = ("circuit", "hamiltonian", "two_layer", "cgscon", "path", "report")

__all__ = [
    "FORMAT_VERSION",
    "SchemaError",
    "MalformedJSON",
    "encode_matrix",
    "decode_matrix",
    "envelope",
    "dumps",
    "loads",
    "read_document",
    "write_atomic",
    "file_sha256",
    "to_document",
    "from_document",
    "load_object",
    "save_object",
]


class SchemaError(InputError):
    code = "schema_violation"


class MalformedJSON(InputError):
    code = "malformed_json"


# ---------------------------------------------------------------------------
# schemas

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _COMPLEX}}
_SUPPORT = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_FACTOR = {
    "type": "object",
    "required": ["support", "matrix"],
    "properties": {
        "support": _SUPPORT,
        "matrix": _MATRIX,
        "hermitian": {"type": "boolean"},
        "unitary": {"type": "boolean"},
    },
    "additionalProperties": False,
}
_TERM = {
    "type": "object",
    "required": ["coefficient", "factors"],
    "properties": {"coefficient": {"type": "number"}, "factors": {"type": "array", "items": _FACTOR}},
    "additionalProperties": False,
}
_HAM = {
    "type": "object",
    "required": ["num_qubits", "layers"],
    "properties": {
        "num_qubits": {"type": "integer", "minimum": 1},
        "layers": {"type": "array", "items": {"type": "array", "items": _TERM}},
        "metadata": {"type": "object"},
    },
    "additionalProperties": False,
}
_GATE = {
    "type": "object",
    "required": ["support", "matrix"],
    "properties": {"support": _SUPPORT, "matrix": _MATRIX, "name": {"type": "string"}},
    "additionalProperties": False,
}
_CIRCUIT = {
    "type": "object",
    "required": ["num_qubits", "gates"],
    "properties": {
        "num_qubits": {"type": "integer", "minimum": 1},
        "gates": {"type": "array", "items": _GATE},
        "witness_qubits": _SUPPORT,
        "output_qubit": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}
_TWO_LAYER = {
    "type": "object",
    "required": ["A", "B", "alpha", "beta"],
    "properties": {
        "A": _HAM,
        "B": _HAM,
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "metadata": {"type": "object"},
    },
    "additionalProperties": False,
}
_CGSCON = {
    "type": "object",
    "required": ["H", "prep_psi", "prep_phi", "c", "s", "m_max"],
    "properties": {
        "H": _HAM,
        "prep_psi": _CIRCUIT,
        "prep_phi": _CIRCUIT,
        "c": {"type": "number"},
        "s": {"type": "number"},
        "m_max": {"type": "integer", "minimum": 0},
        "k_unitaries": {"type": "integer", "minimum": 1},
        "layout_n": {"type": ["integer", "null"]},
        "source": {"oneOf": [_TWO_LAYER, {"type": "null"}]},
        "penalty": {"oneOf": [_FACTOR, {"type": "null"}]},
        "metadata": {"type": "object"},
    },
    "additionalProperties": False,
}
_PATH = {
    "type": "object",
    "required": ["num_qubits", "gates"],
    "properties": {"num_qubits": {"type": "integer", "minimum": 1}, "gates": {"type": "array", "items": _GATE}},
    "additionalProperties": False,
}
_DATA_SCHEMAS = {
    "circuit": _CIRCUIT,
    "hamiltonian": _HAM,
    "two_layer": _TWO_LAYER,
    "cgscon": _CGSCON,
    "path": _PATH,
    "report": {"type": "object"},
}
ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["format_version", "kind", "layout", "provenance", "data"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "kind": {"enum": list(KINDS)},
        "layout": {
            "type": "object",
            "required": ["num_qubits", "bit_order"],
            "properties": {
                "num_qubits": {"type": "integer", "minimum": 1},
                "bit_order": {"const": "lsb0"},
                "registers": {"type": "object", "additionalProperties": _SUPPORT},
            },
        },
        "provenance": {
            "type": "object",
            "required": ["compiler"],
            "properties": {"compiler": {"type": "string"}, "params": {"type": "object"}},
        },
        "data": {"type": "object"},
    },
    "additionalProperties": False,
}

OPTIMIZER_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "m": {"type": ["integer", "null"], "minimum": 0},
        "restarts": {"type": "integer", "minimum": 1},
        "max_steps": {"type": "integer", "minimum": 0},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "lr_grow": {"type": "number", "minimum": 1},
        "lr_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "min_lr": {"type": "number", "exclusiveMinimum": 0},
        "armijo": {"type": "number", "minimum": 0},
        "gtol": {"type": "number", "minimum": 0},
        "tau": {"type": ["number", "null"]},
        "endpoint_weight": {"type": "number"},
        "seed": {"type": "integer"},
        "gradient": {"enum": ["analytic", "fd"]},
        "h": {"type": "number"},
        "init_scale": {"type": "number", "minimum": 0},
        "schedule": {"type": ["array", "null"], "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}},
        "jobs": {"type": "integer", "minimum": 1},
        "init": {"enum": ["random", "completeness"]},
    },
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# primitives


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(rows: list) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except ValueError:
        raise SchemaError("matrix rows are ragged") from None
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise SchemaError("matrix entries must be [re, im] pairs")
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]  # keeps signed zeros
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJSON(f"malformed JSON: {exc}") from None
    validate_document(doc)
    return doc


def validate_document(doc: dict) -> None:
    try:
        jsonschema.validate(doc, ENVELOPE_SCHEMA)
        jsonschema.validate(doc["data"], _DATA_SCHEMAS[doc["kind"]])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"schema violation at '{path}': {exc.message}") from None


def read_document(path: str | os.PathLike, kind: str | tuple[str, ...] | None = None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    doc = loads(text)
    kinds = (kind,) if isinstance(kind, str) else kind
    if kinds is not None and doc["kind"] not in kinds:
        raise InputError(f"{path}: expected a {' or '.join(kinds)} file, got {doc['kind']}")
    return doc


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def envelope(kind: str, data: dict, num_qubits: int, registers: dict | None = None,
             compiler: str = "user", params: dict | None = None) -> dict:
    layout = {"num_qubits": int(num_qubits), "bit_order": "lsb0"}
    if registers:
        layout["registers"] = {k: [int(q) for q in v] for k, v in registers.items()}
    return {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "layout": layout,
        "provenance": {"compiler": compiler, "params": _jsonable(params or {})},
        "data": _jsonable(data),
    }


# ---------------------------------------------------------------------------
# object <-> data


def _factor_data(f: OperatorFactor) -> dict:
    return {"support": list(f.support), "matrix": encode_matrix(f.matrix), "hermitian": f.hermitian, "unitary": f.unitary}


def _factor(d: dict) -> OperatorFactor:
    return OperatorFactor(tuple(d["support"]), decode_matrix(d["matrix"]), d.get("hermitian", False), d.get("unitary", False))


def _ham_data(h: LayeredHamiltonian) -> dict:
    return {
        "num_qubits": h.num_qubits,
        "layers": [[{"coefficient": t.coefficient, "factors": [_factor_data(f) for f in t.factors]} for t in layer]
                   for layer in h.layers],
        "metadata": _jsonable(h.metadata),
    }


def _ham(d: dict) -> LayeredHamiltonian:
    layers = tuple(
        tuple(LocalTerm(tuple(_factor(f) for f in t["factors"]), float(t["coefficient"])) for t in layer)
        for layer in d["layers"]
    )
    return LayeredHamiltonian(int(d["num_qubits"]), layers, dict(d.get("metadata", {})))


def _gates_data(gates) -> list:
    return [{"support": list(g.support), "matrix": encode_matrix(g.unitary), "name": g.name} for g in gates]


def _gates(items) -> tuple[Gate, ...]:
    return tuple(Gate(tuple(g["support"]), decode_matrix(g["matrix"]), g.get("name", "raw")) for g in items)


def _circuit_data(c: Circuit) -> dict:
    return {"num_qubits": c.num_qubits, "gates": _gates_data(c.gates)}


def _circuit(d: dict) -> Circuit:
    return Circuit(int(d["num_qubits"]), _gates(d["gates"]))


def _two_layer_data(t: TwoLayerInstance) -> dict:
    return {"A": _ham_data(t.A), "B": _ham_data(t.B), "alpha": t.alpha, "beta": t.beta, "metadata": _jsonable(t.metadata)}


def _two_layer(d: dict) -> TwoLayerInstance:
    return TwoLayerInstance(_ham(d["A"]), _ham(d["B"]), float(d["alpha"]), float(d["beta"]), dict(d.get("metadata", {})))


def _cgscon_data(inst: CgsconInstance) -> dict:
    return {
        "H": _ham_data(inst.H),
        "prep_psi": _circuit_data(inst.prep_psi),
        "prep_phi": _circuit_data(inst.prep_phi),
        "c": inst.c,
        "s": inst.s,
        "m_max": inst.m_max,
        "k_unitaries": inst.k_unitaries,
        "layout_n": None if inst.layout is None else inst.layout.n,
        "source": None if inst.source is None else _two_layer_data(inst.source),
        "penalty": None if inst.penalty is None else _factor_data(inst.penalty),
        "metadata": _jsonable(inst.metadata),
    }


def _cgscon(d: dict) -> CgsconInstance:
    layout = None if d.get("layout_n") is None else RegisterLayout(int(d["layout_n"]))
    source = None if d.get("source") is None else _two_layer(d["source"])
    penalty = None if d.get("penalty") is None else _factor(d["penalty"])
    if source is not None and layout is not None and source.num_qubits != layout.n:
        raise LayoutError("two-layer source does not match the first register")
    return CgsconInstance(
        _ham(d["H"]), _circuit(d["prep_psi"]), _circuit(d["prep_phi"]), float(d["c"]), float(d["s"]),
        int(d["m_max"]), int(d.get("k_unitaries", 2)), layout, source, penalty, dict(d.get("metadata", {})),
    )


def _registers(obj) -> dict | None:
    if isinstance(obj, CgsconInstance) and obj.layout is not None:
        lay = obj.layout
        return {"first": list(range(lay.n)), "second": list(lay.reg2), "third": list(lay.reg3)}
    return None


def to_document(obj, compiler: str = "user", params: dict | None = None, registers: dict | None = None) -> dict:
    """Envelope for a circuit, Hamiltonian, two-layer instance, CGSCON instance or path."""
    if isinstance(obj, Circuit):
        kind, data, n = "circuit", _circuit_data(obj), obj.num_qubits
    elif isinstance(obj, LayeredHamiltonian):
        kind, data, n = "hamiltonian", _ham_data(obj), obj.num_qubits
    elif isinstance(obj, TwoLayerInstance):
        kind, data, n = "two_layer", _two_layer_data(obj), obj.num_qubits
    elif isinstance(obj, CgsconInstance):
        kind, data, n = "cgscon", _cgscon_data(obj), obj.num_qubits
    elif isinstance(obj, TraversalPath):
        kind, data, n = "path", {"num_qubits": obj.num_qubits, "gates": _gates_data(obj.gates)}, obj.num_qubits
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return envelope(kind, data, n, registers or _registers(obj), compiler, params)


def from_document(doc: dict):
    kind, d = doc["kind"], doc["data"]
    if kind == "circuit":
        obj = _circuit(d)
    elif kind == "hamiltonian":
        obj = _ham(d)
    elif kind == "two_layer":
        obj = _two_layer(d)
    elif kind == "cgscon":
        obj = _cgscon(d)
    elif kind == "path":
        obj = TraversalPath(int(d["num_qubits"]), _gates(d["gates"]))
    else:
        raise InputError(f"{kind} documents do not decode to an object")
    if getattr(obj, "num_qubits", doc["layout"]["num_qubits"]) != doc["layout"]["num_qubits"]:
        raise LayoutError("layout.num_qubits disagrees with the payload")
    return obj


def load_object(path, kind: str | tuple[str, ...] | None = None):
    return from_document(read_document(path, kind))


def save_object(path, obj, compiler: str = "user", params: dict | None = None, registers: dict | None = None) -> None:
    write_atomic(path, dumps(to_document(obj, compiler, params, registers)))
