"""Command-line front end.

Exit codes: 0 success, 1 invariant failure beyond tolerance, 2 malformed input.
Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .measures import (
    MAX_DENSE_DIM,
    EREstimateConfig,
    entanglement_pure,
    nested_terms,
    relative_entropy_of_entanglement_estimate,
    verify_membership,
)
from .roof import MAX_ROOF_DIM, RoofConfig, roof_minimize, wootters_ef
from .schmidt import PRUNE_TOL, compact_decomposition, decohere, enumerate_orderings, verify_tree
from .states import (
    EIGEN_CLIP,
    RANK_TOL,
    SPECTRUM_TOL,
    PureState,
    StateSizeError,
    SubsystemLayout,
    haar_random_density,
    haar_random_state,
    validate_state,
)
from .threequbit import NAMED_STATES, classify, make_named_state, verify_constraint

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT = 0, 1, 2

TOLERANCES = {
    "schmidt_prune": PRUNE_TOL,
    "eigenvalue_clip": EIGEN_CLIP,
    "spectrum_equality": SPECTRUM_TOL,
    "relative_rank": RANK_TOL,
}


class InputError(Exception):
    pass


class InvariantError(Exception):
    pass


def _base(value: str):
    if value == "e":
        return "e"
    if value == "2":
        return 2
    raise argparse.ArgumentTypeError("base must be 2 or e")


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return x


def _positive_int(value: str) -> int:
    x = int(value)
    if x < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return x


def _label_list(value: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in value.split(",") if x.strip())


def _dims(value: str) -> list[int]:
    try:
        dims = [int(x) for x in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be comma-separated integers, got {value!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be positive, got {value!r}")
    return dims


def _load(path: str):
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {path}")
    try:
        state = io.load_state(p)
    except (io.StateFileError, StateSizeError) as exc:
        raise InputError(f"cannot parse state file {path}: {exc}") from None
    report = validate_state(state)
    if not report.passed:
        failed = ", ".join(k for k, ok in report.checks.items() if not ok)
        raise InvariantError(f"input state fails invariants ({failed}): {io.dumps(report)}")
    return state


def _require_pure(state, command: str) -> PureState:
    if not isinstance(state, PureState):
        raise InputError(f"'{command}' needs a pure state (amplitudes); use 'roof' for density matrices")
    return state


def _orderings(args, layout: SubsystemLayout):
    if args.ordering:
        o = args.ordering
        if sorted(o) != sorted(layout.labels):
            raise InputError(f"ordering {','.join(o)} is not a permutation of {','.join(layout.labels)}")
        return [o]
    if getattr(args, "sample_orderings", None):
        all_o = enumerate_orderings(layout)
        rng = np.random.default_rng(args.seed)
        pick = rng.choice(len(all_o), size=min(args.sample_orderings, len(all_o)), replace=False)
        return [all_o[i] for i in sorted(pick)]
    return enumerate_orderings(layout)


def cmd_decompose(args) -> tuple[dict, bool]:
    psi = _require_pure(_load(args.input), "decompose")
    out, ok = [], True
    for o in _orderings(args, psi.layout):
        tree = compact_decomposition(psi, o)
        rep = verify_tree(tree, psi)
        ok &= rep.passed(args.tol)
        out.append({"tree": tree, "verification": rep})
    return {"decompositions": out, "tolerance": args.tol}, ok


def _measure_report(psi: PureState, args) -> dict:
    res = entanglement_pure(psi, args.base, _orderings(args, psi.layout))
    bits = res.value if res.base == "2" else res.value / np.log(2)
    return {
        "Ec": res.value,
        "Ec_bits": bits,
        "base": res.base,
        "argmin_ordering": list(res.argmin_ordering),
        "per_ordering": [{"ordering": list(o), "entropy": h} for o, h in res.per_ordering.items()],
        "nested_terms": nested_terms(res.tree, args.base),
        "correlation_rho": res.correlation_rho,
        "correlation_sigma": res.correlation_sigma,
        "sigma": res.sigma,
    }


def cmd_measure(args) -> tuple[dict, bool]:
    psi = _require_pure(_load(args.input), "measure")
    if psi.layout.n_parties < 2:
        raise InputError("measure needs at least two parties")
    return _measure_report(psi, args), True


def cmd_classify(args) -> tuple[dict, bool]:
    psi = _require_pure(_load(args.input), "classify")
    if psi.layout.dims != (2, 2, 2):
        raise InputError(f"classify needs three qubits, got dims {list(psi.layout.dims)}")
    c = classify(psi)
    sf = c.standard_form
    ec = entanglement_pure(psi, 2)
    con = verify_constraint(sf)
    return {
        "class": c.label,
        "ranks": list(c.marginal_ranks),
        "n_ms": c.n_ms,
        "confirmed": c.confirmed,
        "spectra": c.spectra,
        "ordering": list(sf.ordering),
        "p": sf.p,
        "alpha": sf.alpha,
        "beta": sf.beta,
        "theta_b": sf.theta_b,
        "theta_c": sf.theta_c,
        "constraint": con,
        "Ec_bits": ec.value,
        "argmin_ordering": list(ec.argmin_ordering),
    }, True


def cmd_verify(args) -> tuple[dict, bool]:
    psi = _require_pure(_load(args.input), "verify")
    if psi.layout.total_dim > MAX_DENSE_DIM:
        raise InputError(f"dimension cap exceeded: verify supports total dimension <= {MAX_DENSE_DIM}")
    out, ok = [], True
    for o in _orderings(args, psi.layout):
        rep = verify_membership(psi, decohere(compact_decomposition(psi, o)), args.base)
        ok &= rep.passed(args.tol)
        out.append({"ordering": list(o), "report": rep})
    doc = {"memberships": out, "tolerance": args.tol, "base": out[0]["report"].base}
    if args.estimate_er:
        est = relative_entropy_of_entanglement_estimate(psi, EREstimateConfig(seed=args.seed), args.base)
        doc["relative_entropy_of_entanglement_upper_bound"] = {
            "value": est.value, "compact_value": est.compact_value,
            "restart_values": est.restart_values, "converged": est.converged,
        }
    return doc, ok


def cmd_roof(args) -> tuple[dict, bool]:
    state = _load(args.input)
    rho = state.density() if isinstance(state, PureState) else state
    if rho.layout.total_dim > MAX_ROOF_DIM:
        raise InputError(f"dimension cap exceeded: roof supports total dimension <= {MAX_ROOF_DIM}")
    config = RoofConfig(ensemble_size=args.ensemble_size, restarts=args.restarts,
                        max_iters=args.max_iters, seed=args.seed, tol=args.tol)
    res = roof_minimize(rho, config, args.base)
    ens = res.best_ensemble
    resid = ens.representation_residual(rho)
    doc = {
        "value": res.value,
        "base": res.base,
        "ensemble_size": res.ensemble_size,
        "restarts_used": res.restarts_used,
        "converged_flags": res.converged_flags,
        "restart_values": res.restart_values,
        "eigen_ensemble_value": res.eigen_ensemble_value,
        "representation_residual": resid,
        "best_ensemble": {"weights": ens.weights, "states": list(ens.states)},
        "config": config,
    }
    if rho.layout.dims == (2, 2):
        doc["wootters_ef"] = wootters_ef(rho, args.base)
    return doc, resid <= 1e-9


def cmd_random(args) -> tuple[dict | None, bool]:
    layout = SubsystemLayout.from_dims(args.dims, args.labels)
    rng = np.random.default_rng(args.seed)
    states = []
    for _ in range(args.count):
        if args.rank is None:
            states.append(haar_random_state(layout, rng))
        else:
            if args.rank > layout.total_dim:
                raise InputError(f"rank {args.rank} exceeds total dimension {layout.total_dim}")
            states.append(haar_random_density(layout, args.rank, rng))
    return _emit_states(states, args), True


def cmd_named(args) -> tuple[dict | None, bool]:
    return _emit_states([make_named_state(args.name)], args), True


def _emit_states(states, args):
    if args.output is None:
        if len(states) == 1:
            return io.state_to_dict(states[0])
        return {"states": [io.state_to_dict(s) for s in states]}
    out = Path(args.output)
    if len(states) == 1:
        io.save_state(states[0], out)
        return {"written": [str(out)]}
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, s in enumerate(states):
        p = out / f"state_{i:04d}.json"
        io.save_state(s, p)
        paths.append(str(p))
    return {"written": paths}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--base", type=_base, default=2, help="logarithm base: 2 (bits) or e")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="compactent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(name, help_, ordering=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("input", help="state file (JSON)")
        if ordering:
            p.add_argument("--ordering", type=_label_list, help="comma-separated party labels, e.g. A,B,C")
        return p

    p = with_input("decompose", "compact decomposition tree(s) with verification")
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.set_defaults(func=cmd_decompose)

    p = with_input("measure", "pure-state entanglement E^c")
    p.add_argument("--sample-orderings", type=_positive_int,
                   help="evaluate a seeded random subset of orderings")
    p.set_defaults(func=cmd_measure)

    p = with_input("classify", "three-qubit class and standard form", ordering=False)
    p.set_defaults(func=cmd_classify)

    p = with_input("verify", "membership report for every ordering's decohered state")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--estimate-er", action="store_true", help="also estimate an upper bound on E_R")
    p.set_defaults(func=cmd_verify)

    p = with_input("roof", "convex-roof E^c of a mixed state", ordering=False)
    p.add_argument("--ensemble-size", type=_positive_int, default=None)
    p.add_argument("--restarts", type=_positive_int, default=8)
    p.add_argument("--max-iters", type=_positive_int, default=500)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.set_defaults(func=cmd_roof)

    p = sub.add_parser("random", parents=[common], help="sample Haar-random states")
    p.add_argument("--dims", type=_dims, required=True, help="e.g. 2,2,2")
    p.add_argument("--labels", type=_label_list, default=None)
    p.add_argument("--rank", type=_positive_int, default=None, help="emit a density matrix of this rank")
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("-o", "--output", default=None, help="file (count 1) or directory")
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("named", parents=[common], help="emit a reference state")
    p.add_argument("name", choices=NAMED_STATES)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_named)
    return parser


def _text(doc, indent=0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            if isinstance(v, (dict, list)) and v and not all(isinstance(x, (int, float, str)) for x in v):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(doc, list):
        for v in doc:
            lines.append(_text(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}")
    else:
        lines.append(f"{pad}{doc}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        doc, ok = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if doc is not None:
        if "written" not in doc and "dims" not in doc and "states" not in doc:
            doc = {**doc, "tolerances": TOLERANCES}
        if args.format == "json":
            print(io.dumps(doc))
        else:
            print(_text(io.to_jsonable(doc)))
    if not ok:
        print("error: invariant check failed beyond tolerance", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
