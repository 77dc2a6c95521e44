"""``qcw`` command line.

Exit codes: 0 pass, 1 check failed, 2 input error, 3 resource cap.
Errors go to stderr as one JSON object ``{"error": {"code", "message"}}``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import jsonschema

from . import __version__
from . import io as qio
from .circuits import Circuit, swap_normalize
from .errors import CapError, InputError
from .hamiltonian import LayeredHamiltonian, TwoLayerInstance, check_layered, check_psd, degree_profile
from .optimizer import OptimizerConfig, ParamPath, materialize, optimize
from .reductions import CgsconInstance, PromiseGapWarning, completeness_path, kitaev_54, layer_54, two_layer_to_cgscon
from .spectra import ground_energy_dense, ground_energy_iterative
from .verify import evaluate_path, verify_lemmas

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"environment variable {name} must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(obj) -> None:
    sys.stdout.write(qio.dumps(obj))


def _report(kind: str, args, inputs: dict, body: dict) -> dict:
    """Report envelope; inputs are hashed so identical runs give identical bytes."""
    hashes = {name: qio.file_sha256(p) for name, p in sorted(inputs.items())}
    n = body.get("num_qubits", 1)
    params = {"command": kind, "tool_version": __version__, "inputs": hashes}
    # file paths and worker counts are left out so reports depend only on content
    params.update({k: getattr(args, k) for k in ("method", "tol", "max_iter", "seed", "samples") if hasattr(args, k)})
    return qio.envelope("report", body, max(1, int(n)), None, f"qcw {kind}", params)


def _as_hamiltonian(obj) -> list[tuple[str, LayeredHamiltonian]]:
    if isinstance(obj, LayeredHamiltonian):
        return [("H", obj)]
    if isinstance(obj, TwoLayerInstance):
        return [("A", obj.A), ("B", obj.B)]
    if isinstance(obj, CgsconInstance):
        return [("H", obj.H)]
    raise InputError("expected a hamiltonian, two_layer or cgscon file")


# ---------------------------------------------------------------------------
# commands


def cmd_build_c2h(args) -> int:
    doc = qio.read_document(args.circuit, "circuit")
    circ = qio.from_document(doc)
    witness = args.witness_qubits if args.witness_qubits is not None else doc["data"].get("witness_qubits", [])
    output = args.output_qubit if args.output_qubit is not None else doc["data"].get("output_qubit", 0)
    normalized, loc = swap_normalize(circ, args.budget, output)
    ch = kitaev_54(normalized, witness, loc.get(output, output), args.budget)
    n_data = normalized.num_qubits
    params = {"witness_qubits": list(ch.witness_qubits), "output_qubit": ch.output_qubit, "m": ch.m,
              "wire_map": {str(k): v for k, v in loc.items()}, "families": ch.families, "scale": ch.scale}
    registers = {"data": list(range(n_data)), "clock": list(ch.clock_qubits)}
    qio.save_object(args.out, ch.hamiltonian, "kitaev_54", params, registers)
    _emit({"num_qubits": ch.num_qubits, "m": ch.m, "terms": len(ch.hamiltonian.terms)})
    return EXIT_OK


def cmd_build_layer(args) -> int:
    H = qio.load_object(args.ham, "hamiltonian")
    t = layer_54(H, args.b, c=args.c, s=args.s, levels=args.levels)
    qio.save_object(args.out, t, "layer_54", dict(t.metadata))
    meta = t.metadata
    _emit({"kappa": meta["kappa"], "r": meta["r"], "l": meta["l"], "alpha": t.alpha, "beta": t.beta,
           "num_qubits": t.num_qubits})
    return EXIT_OK


def cmd_build_cgscon(args) -> int:
    t = qio.load_object(args.twolayer, "two_layer")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PromiseGapWarning)
        inst = two_layer_to_cgscon(t, args.m_max)
    gap_empty = any(issubclass(w.category, PromiseGapWarning) for w in caught)
    if gap_empty:
        sys.stderr.write(json.dumps({"warning": {"code": "promise_gap_empty", "c": inst.c, "s": inst.s}}) + "\n")
    qio.save_object(args.out, inst, "two_layer_to_cgscon", {"m_max": args.m_max})
    _emit({"c": inst.c, "s": inst.s, "num_qubits": inst.num_qubits, "promise_gap_empty": gap_empty})
    return EXIT_OK


def cmd_check(args) -> int:
    obj = qio.load_object(args.ham, ("hamiltonian", "two_layer", "cgscon"))
    out, ok = {"check": args.what}, True
    for name, h in _as_hamiltonian(obj):
        if args.what == "commute":
            rep = check_layered(h)
            out[name] = {"ok": rep.ok, "worst_pair": rep.worst_pair, "worst_norm": rep.worst_norm,
                         "pairs_checked": rep.pairs_checked, "layers": len(h.layers)}
            ok &= rep.ok
        elif args.what == "psd":
            bad = check_psd(h)
            out[name] = {"ok": not bad, "failing_terms": [i for i, _ in bad],
                         "min_eigenvalues": [c.min_eigenvalue for _, c in bad]}
            ok &= not bad
        else:
            prof = degree_profile(h)
            good = (args.max_k is None or prof.k <= args.max_k) and (args.max_l is None or prof.l <= args.max_l)
            out[name] = {"ok": good, "k": prof.k, "l": prof.l, "degrees": list(prof.degrees)}
            ok &= good
    out["ok"] = bool(ok)
    _emit(out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ground(args) -> int:
    obj = qio.load_object(args.ham, ("hamiltonian", "two_layer", "cgscon"))
    hs = _as_hamiltonian(obj)
    H = hs[0][1] if len(hs) == 1 else LayeredHamiltonian(hs[0][1].num_qubits, (hs[0][1].terms + hs[1][1].terms,))
    if args.method == "dense":
        res = ground_energy_dense(H)
    else:
        res = ground_energy_iterative(H, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    body = dict(res.to_dict(), num_qubits=H.num_qubits)
    if args.report:
        qio.write_atomic(args.report, qio.dumps(_report("ground", args, {"ham": args.ham}, body)))
    _emit(body)
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_path_completeness(args) -> int:
    inst = qio.load_object(args.instance, "cgscon")
    if inst.layout is None:
        raise InputError("completeness paths need an instance with the three-register layout")
    prep = qio.load_object(args.prep, "circuit")
    if prep.num_qubits != inst.layout.n:
        prep = Circuit(inst.layout.n, prep.gates)
    path = completeness_path(prep, inst.layout.n)
    qio.save_object(args.out, path, "completeness_path", {"prep_gates": len(prep), "length": len(path)})
    _emit({"length": len(path), "num_qubits": path.num_qubits})
    return EXIT_OK


def cmd_path_eval(args) -> int:
    inst = qio.load_object(args.instance, "cgscon")
    path = qio.load_object(args.path, "path")
    tr = evaluate_path(inst, path, retain=False)
    body = dict(tr.to_dict(), c=inst.c, s=inst.s, num_qubits=inst.num_qubits)
    qio.write_atomic(args.report, qio.dumps(_report("path eval", args, {"instance": args.instance, "path": args.path}, body)))
    _emit({"max_energy": tr.max_energy, "epsilon": tr.epsilon, "delta": tr.delta, "yes_witness": tr.yes_witness})
    return EXIT_OK


def cmd_path_optimize(args) -> int:
    inst = qio.load_object(args.instance, "cgscon")
    raw = {}
    inputs = {"instance": args.instance}
    if args.config:
        inputs["config"] = args.config
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise qio.MalformedJSON(f"malformed JSON in config: {exc}") from None
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc.strerror}") from None
        try:
            jsonschema.validate(raw, qio.OPTIMIZER_CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise qio.SchemaError(f"optimizer config: {exc.message}") from None
    init_mode = raw.pop("init", "random")
    raw.setdefault("seed", args.seed)
    raw["jobs"] = args.jobs
    cfg = OptimizerConfig(**raw)
    init = None
    if init_mode == "completeness":
        if inst.layout is None:
            raise InputError("completeness initialization needs the three-register layout")
        init = ParamPath.from_path(completeness_path(Circuit(inst.layout.n, ()), inst.layout.n))
    res = optimize(inst, cfg, init)
    body = dict(res.to_dict(), config=cfg.to_dict(), num_qubits=inst.num_qubits)
    body["config"].pop("jobs")  # worker count does not change results
    qio.write_atomic(args.report, qio.dumps(_report("path optimize", args, inputs, body)))
    if args.out:
        qio.save_object(args.out, materialize(res.best), "optimizer", {"best_restart": res.best_restart})
    _emit({"score": res.trace.score, "epsilon": res.trace.epsilon, "max_energy": res.trace.max_energy,
           "best_restart": res.best_restart})
    return EXIT_OK


def cmd_verify_lemmas(args) -> int:
    inst = qio.load_object(args.instance, "cgscon")
    path = qio.load_object(args.path, "path")
    out = verify_lemmas(inst, path, args.samples, args.seed)
    ok = True
    for key in ("small_projection", "modified_traversal", "e_term"):
        if key in out and out[key].get("precondition_ok", True):
            ok &= bool(out[key]["holds"])
    if out.get("soundness", {}).get("applicable"):
        ok &= bool(out["soundness"]["holds"])
    body = dict(out, ok=ok, num_qubits=inst.num_qubits)
    qio.write_atomic(args.report, qio.dumps(_report("verify lemmas", args, {"instance": args.instance, "path": args.path}, body)))
    _emit({"ok": ok, **{k: v.get("holds") for k, v in out.items() if isinstance(v, dict) and "holds" in v}})
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seed_default = _env_int("QCW_SEED", 0)
    jobs_default = _env_int("QCW_JOBS", 1)
    p = argparse.ArgumentParser(prog="qcw", description="Commuting-Hamiltonian connectivity workbench.")
    p.add_argument("--version", action="version", version=f"qcw {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="instance compilers").add_subparsers(dest="target", required=True)
    b = build.add_parser("c2h", help="circuit -> clock Hamiltonian")
    b.add_argument("--circuit", required=True)
    b.add_argument("--witness-qubits", type=_int_list, default=None)
    b.add_argument("--output-qubit", type=int, default=None)
    b.add_argument("--budget", type=int, default=3)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_c2h)
    b = build.add_parser("layer", help="local Hamiltonian -> two commuting layers")
    b.add_argument("--ham", required=True)
    b.add_argument("--b", type=float, required=True)
    b.add_argument("--c", type=float, default=0.0)
    b.add_argument("--s", type=float, default=None)
    b.add_argument("--levels", type=int, default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_layer)
    b = build.add_parser("cgscon", help="two layers -> commuting connectivity instance")
    b.add_argument("--twolayer", required=True)
    b.add_argument("--m-max", type=int, required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_cgscon)

    c = sub.add_parser("check", help="static Hamiltonian checks")
    c.add_argument("what", choices=["commute", "psd", "degree"])
    c.add_argument("--ham", required=True)
    c.add_argument("--max-k", type=int, default=None)
    c.add_argument("--max-l", type=int, default=None)
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("ground", help="ground energy")
    g.add_argument("--ham", required=True)
    g.add_argument("--method", choices=["dense", "lanczos"], default="dense")
    g.add_argument("--tol", type=float, default=1e-9)
    g.add_argument("--max-iter", type=int, default=None)
    g.add_argument("--seed", type=int, default=seed_default)
    g.add_argument("--report", default=None)
    g.set_defaults(func=cmd_ground)

    path = sub.add_parser("path", help="traversal paths").add_subparsers(dest="action", required=True)
    a = path.add_parser("completeness")
    a.add_argument("--instance", required=True)
    a.add_argument("--prep", required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_path_completeness)
    a = path.add_parser("eval")
    a.add_argument("--instance", required=True)
    a.add_argument("--path", required=True)
    a.add_argument("--report", required=True)
    a.set_defaults(func=cmd_path_eval)
    a = path.add_parser("optimize")
    a.add_argument("--instance", required=True)
    a.add_argument("--config", default=None)
    a.add_argument("--report", required=True)
    a.add_argument("--out", default=None)
    a.add_argument("--seed", type=int, default=seed_default)
    a.add_argument("--jobs", type=int, default=jobs_default)
    a.set_defaults(func=cmd_path_optimize)

    v = sub.add_parser("verify", help="lemma checks").add_subparsers(dest="action", required=True)
    a = v.add_parser("lemmas")
    a.add_argument("--instance", required=True)
    a.add_argument("--path", required=True)
    a.add_argument("--report", required=True)
    a.add_argument("--samples", type=int, default=200)
    a.add_argument("--seed", type=int, default=seed_default)
    a.set_defaults(func=cmd_verify_lemmas)
    return p


def _error(exc: Exception, code: str) -> None:
    sys.stderr.write(json.dumps({"error": {"code": code, "message": str(exc)}}) + "\n")


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
    except InputError as exc:
        _error(exc, exc.code)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CapError as exc:
        _error(exc, exc.code)
        return EXIT_CAP
    except InputError as exc:
        _error(exc, exc.code)
        return EXIT_INPUT
    except MemoryError as exc:
        _error(exc, "resource_cap")
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
