"""``persistent-harmonics`` command line.

Exit status: 0 on success, 2 when a decision carries the promise-violated
flag, 1 on input or usage errors (and on failing ``verify-suite`` checks).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .chains import SubsetStateDescriptor, laplacian
from .circuits import Circuit, ExactState
from .complex import ComplexTooLarge, CliqueComplex, WeightedGraph, format_rational, parse_rational
from .exact import RationalMatrix
from .harmonics import PersistenceInstance, betti_number, decide_harmonic_persistence, decide_harmonics, spectral_summary
from .overlap import HamiltonianMatrix, QpeConfig, exact_overlap, kernel_overlap_sq, qpe_decide, write_sample_log
from .qsat import build_bravyi_hamiltonian, build_kitaev_hamiltonian, history_state, prehistory_state
from .reduction import DEFAULT_LAMBDA, build_reduction, gadget_bundle, load_bundle, s_label

EXIT_OK, EXIT_INPUT, EXIT_PROMISE = 0, 1, 2


class InputError(ValueError):
    pass


# -- file formats ---------------------------------------------------------------


def _read_json(path) -> object:
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except FileNotFoundError:
        raise InputError(f"{p}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc})") from None


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def matrix_from_json(data) -> HamiltonianMatrix:
    """``{"dimension": d, "entries": [[i, j, value], ...]}``; string values are exact rationals."""
    if not isinstance(data, dict) or "dimension" not in data:
        raise InputError("matrix.dimension: missing field")
    d = data["dimension"]
    if not isinstance(d, int) or d < 1:
        raise InputError("matrix.dimension: expected a positive integer")
    entries = data.get("entries", [])
    exact = all(isinstance(e[2], (str, int)) for e in entries if isinstance(e, list) and len(e) == 3)
    trip = []
    for k, e in enumerate(entries):
        if not (isinstance(e, list) and len(e) == 3 and isinstance(e[0], int) and isinstance(e[1], int)):
            raise InputError(f"matrix.entries[{k}]: expected [row, col, value]")
        if not (0 <= e[0] < d and 0 <= e[1] < d):
            raise InputError(f"matrix.entries[{k}]: index out of range")
        try:
            v = parse_rational(e[2]) if exact else float(e[2])
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise InputError(f"matrix.entries[{k}]: {exc}") from None
        trip.append((e[0], e[1], v))
    if exact:
        m = RationalMatrix.from_entries((d, d), trip)
    else:
        import numpy as np

        m = np.zeros((d, d))
        for i, j, v in trip:
            m[i, j] += v
    try:
        return HamiltonianMatrix(m)
    except ValueError as exc:
        raise InputError(f"matrix: {exc}") from None


def matrix_to_json(H: HamiltonianMatrix) -> dict:
    if H.exact:
        ent = [[i, j, format_rational(v)] for i, j, v in sorted(H.matrix.entries())]
    else:
        a = H.dense()
        ent = [[int(i), int(j), float(a[i, j])] for i, j in zip(*a.nonzero())]
    return {"dimension": H.dim, "entries": ent}


def state_from_json(data):
    """``{"dimension": d, "amplitudes": [[index, value], ...], "scale_sq": "p/q"}``."""
    if not isinstance(data, dict) or "dimension" not in data:
        raise InputError("state.dimension: missing field")
    d = data["dimension"]
    if not isinstance(d, int) or d < 1:
        raise InputError("state.dimension: expected a positive integer")
    amps = data.get("amplitudes", [])
    for k, a in enumerate(amps):
        if not (isinstance(a, list) and len(a) == 2 and isinstance(a[0], int)):
            raise InputError(f"state.amplitudes[{k}]: expected [index, value]")
        if not 0 <= a[0] < d:
            raise InputError(f"state.amplitudes[{k}]: index out of range")
    if all(isinstance(a[1], (str, int)) for a in amps) and not isinstance(data.get("scale_sq", "1"), float):
        try:
            return ExactState(d, {a[0]: parse_rational(a[1]) for a in amps}, parse_rational(data.get("scale_sq", "1")))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"state: {exc}") from None
    import numpy as np

    v = np.zeros(d)
    for a in amps:
        v[a[0]] = float(a[1])
    return v * float(data.get("scale_sq", 1)) ** 0.5


def state_to_json(s: ExactState) -> dict:
    return {
        "dimension": s.dim,
        "amplitudes": [[i, format_rational(a)] for i, a in sorted(s.amps.items())],
        "scale_sq": format_rational(s.scale_sq),
    }


def _graph(path) -> WeightedGraph:
    try:
        return WeightedGraph.from_json(_read_json(path))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _circuit(path) -> Circuit:
    try:
        return Circuit.from_json(_read_json(path))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _descriptor(path, decomposition=None) -> SubsetStateDescriptor:
    try:
        return SubsetStateDescriptor.from_json(_read_json(path), decomposition)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _complex(args, p: int) -> CliqueComplex:
    g = _graph(args.graph)
    max_dim = args.max_dim if args.max_dim is not None else p + 1
    if max_dim < p:
        raise InputError(f"--max-dim {max_dim} is below p = {p}")
    return CliqueComplex(g, max_dim)


def _qpe_config(args) -> QpeConfig:
    try:
        return QpeConfig(bits=args.bits, repetitions=args.repetitions, seed=args.seed, window=args.window)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _decision_exit(d) -> int:
    return EXIT_PROMISE if d.promise_violated else EXIT_OK


# -- subcommands -----------------------------------------------------------------


def cmd_complex_build(args) -> int:
    g = _graph(args.graph)
    K = CliqueComplex(g, args.max_dim)
    _emit({
        "graph": g.to_json(),
        "max_dim": K.max_dim,
        "counts": list(K.counts),
        "truncated": K.truncated,
        "simplices": [[list(s) for s in K.simplices[p]] for p in range(K.max_dim + 1)],
    }, args.out)
    return EXIT_OK


def cmd_betti(args) -> int:
    K = _complex(args, args.p)
    if args.backend == "exact":
        print(betti_number(K, args.p))
    else:
        print(spectral_summary(laplacian(K, args.p), "float").kernel_dim)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    K = _complex(args, args.p)
    _emit(spectral_summary(laplacian(K, args.p), args.backend, seed=args.seed or 0).to_json(), args.out)
    return EXIT_OK


def _method_args(args):
    method = args.method
    if method == "exact" and args.backend == "float":
        method = "float"
    return method, (_qpe_config(args) if method == "qpe" else None)


def cmd_harmonics_decide(args) -> int:
    K = _complex(args, args.p)
    desc = _descriptor(args.descriptor)
    method, cfg = _method_args(args)
    try:
        d = decide_harmonics(K, args.p, desc, args.delta, method, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(d.to_json(), args.out)
    if args.samples and method == "qpe":
        write_sample_log(d, args.samples)
    return _decision_exit(d)


def cmd_persistence_decide(args) -> int:
    try:
        b = load_bundle(args.bundle)
    except (ValueError, json.JSONDecodeError, FileNotFoundError) as exc:
        raise InputError(f"bundle: {exc}") from None
    if args.label is not None:
        try:
            desc = s_label(b.qubits, args.label)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    elif args.descriptor is not None:
        desc = _descriptor(args.descriptor, b.qubits.decomposition)
    elif b.descriptor is not None:
        desc = b.descriptor
    else:
        raise InputError("no subset state: pass --label or --descriptor (bundle has none)")
    method, cfg = _method_args(args)
    try:
        inst = PersistenceInstance(b.K1, b.K2, b.p, desc, args.delta)
        d = decide_harmonic_persistence(inst, method, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(d.to_json(), args.out)
    if args.samples and method == "qpe":
        write_sample_log(d, args.samples)
    return _decision_exit(d)


def _compile(args, builder) -> int:
    c = _circuit(args.circuit)
    try:
        h = builder(c, witness_qubits=args.witness or (), reject_bit=args.reject_bit)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(h.to_json(), args.out)
    return EXIT_OK


def _hamiltonian_and_state(args):
    if args.matrix:
        H = matrix_from_json(_read_json(args.matrix))
        if not args.state_file:
            raise InputError("--matrix needs --state-file")
        return H, state_from_json(_read_json(args.state_file))
    if not args.circuit:
        raise InputError("pass --circuit or --matrix")
    c = _circuit(args.circuit)
    builder = build_bravyi_hamiltonian if args.variant == "bravyi" else build_kitaev_hamiltonian
    try:
        h = builder(c)
        H = HamiltonianMatrix.from_hamiltonian(h, args.groups)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    state = history_state(c, args.variant) if args.state == "history" else prehistory_state(c, args.variant)
    return H, state


def cmd_overlap_exact(args) -> int:
    H, state = _hamiltonian_and_state(args)
    try:
        if args.mode == "kernel" and H.exact and isinstance(state, ExactState):
            k = kernel_overlap_sq(H, state)
            out = {"mode": "kernel", "overlap_sq": format_rational(k), "overlap": exact_overlap(H, state)}
        else:
            out = {"mode": args.mode, "overlap": exact_overlap(H, state, args.mode, args.eta)}
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(out, args.out)
    return EXIT_OK


def cmd_overlap_qpe(args) -> int:
    H, state = _hamiltonian_and_state(args)
    cfg = _qpe_config(args)
    try:
        d = qpe_decide(H, state, float(args.delta), cfg, args.mode, eta=args.eta)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.samples:
        write_sample_log(d, args.samples)
    out = d.to_json()
    out["diagnostics"] = {k: v for k, v in d.diagnostics.items() if k != "samples"}
    _emit(out, args.out)
    return EXIT_OK


def cmd_reduce(args) -> int:
    try:
        if args.circuit:
            art = build_reduction(_circuit(args.circuit), args.lam, args.gadget or None)
            path = art.save_bundle(args.out)
        else:
            if args.qubits is None:
                raise InputError("pass --circuit or --qubits")
            path = gadget_bundle(args.out, args.qubits, args.gadget or [], args.lam)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    print(json.dumps(json.loads((Path(path) / "manifest.json").read_text()), indent=1))
    return EXIT_OK


def cmd_verify_suite(args) -> int:
    from .verify import CRITERIA, run_all

    sel = None
    if args.only:
        try:
            sel = [int(x) for x in args.only.split(",")]
        except ValueError:
            raise InputError("--only expects comma-separated criterion numbers") from None
        bad = [k for k in sel if k not in CRITERIA]
        if bad:
            raise InputError(f"unknown criteria {bad}")
    results = run_all(sel)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.ok for r in results) else EXIT_INPUT


# -- parser ---------------------------------------------------------------------


def _add_qpe(p, seed_required=False):
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--samples", help="write the phase samples as CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="persistent-harmonics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complex-build", help="enumerate the clique complex of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--max-dim", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_complex_build)

    for name, func in (("betti", cmd_betti), ("spectrum", cmd_spectrum)):
        p = sub.add_parser(name)
        p.add_argument("--graph", required=True)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--max-dim", type=int)
        p.add_argument("--backend", choices=("exact", "float"), default="exact" if name == "betti" else "float")
        if name == "spectrum":
            p.add_argument("--seed", type=int)
            p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("harmonics-decide")
    p.add_argument("--graph", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--method", choices=("exact", "qpe"), default="exact")
    p.add_argument("--backend", choices=("exact", "float"), default="exact",
                   help="arithmetic for the projection when --method exact")
    p.add_argument("--out")
    _add_qpe(p)
    p.set_defaults(func=cmd_harmonics_decide)

    p = sub.add_parser("persistence-decide")
    p.add_argument("--bundle", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--label", help="computational-basis label x, uses s(|x>)")
    g.add_argument("--descriptor")
    p.add_argument("--delta", type=_rational, default=Fraction(1, 2))
    p.add_argument("--method", choices=("exact", "qpe"), default="exact")
    p.add_argument("--backend", choices=("exact", "float"), default="exact",
                   help="arithmetic for the projection when --method exact")
    p.add_argument("--out")
    _add_qpe(p)
    p.set_defaults(func=cmd_persistence_decide)

    for name, builder in (("compile-bravyi", build_bravyi_hamiltonian), ("compile-kitaev", build_kitaev_hamiltonian)):
        p = sub.add_parser(name)
        p.add_argument("--circuit", required=True)
        p.add_argument("--witness", type=int, nargs="*")
        p.add_argument("--reject-bit", type=int, choices=(0, 1), default=1)
        p.add_argument("--out")
        p.set_defaults(func=lambda a, b=builder: _compile(a, b))

    for name, func in (("overlap-exact", cmd_overlap_exact), ("overlap-qpe", cmd_overlap_qpe)):
        p = sub.add_parser(name)
        p.add_argument("--circuit")
        p.add_argument("--variant", choices=("bravyi", "kitaev"), default="bravyi")
        p.add_argument("--state", choices=("prehistory", "history"), default="prehistory")
        p.add_argument("--groups", nargs="*", default=None)
        p.add_argument("--matrix")
        p.add_argument("--state-file")
        p.add_argument("--mode", choices=("kernel", "low_energy", "complement") if name == "overlap-exact"
                       else ("kernel", "low_energy"), default="kernel")
        p.add_argument("--eta", type=float)
        p.add_argument("--out")
        if name == "overlap-qpe":
            p.add_argument("--delta", type=_rational, default=Fraction(1, 2))
            _add_qpe(p, seed_required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("reduce")
    p.add_argument("--circuit")
    p.add_argument("--qubits", type=int, help="bare qubit-graph instance with N qubits")
    p.add_argument("--gadget", nargs="*")
    p.add_argument("--lam", type=_rational, default=DEFAULT_LAMBDA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify_suite)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, ComplexTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
