"""Command-line interface: state files, reports and protocol runs.

Every command prints a plain table, or sorted JSON with ``--json``. Global
options may also be set through environment variables with the ``ANONMET_``
prefix (``ANONMET_TOL``, ``ANONMET_SEED``, ``ANONMET_SEARCH_BOUND``,
``ANONMET_GRID_POINTS``, ``ANONMET_JSON``, ``ANONMET_STRICT``); flags win.

Exit codes: 0 success, 2 malformed input, 3 a matrix violating the density
matrix invariants, 4 an inconclusive result under ``--strict``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .asymmetry import mode_decompose
from .classify import classify, find_wa_pair
from .metrology import DIRECTION_NOTE, figure_of_merit, robustness_bounds, state_merit
from .protocol import purification_attack, run_protocol
from .qmat import TOL, DensityMatrix, HamiltonianPair, StateError, configure
from .states import CATALOG, catalog

STATE_FORMAT = "anonmet.state"
STATE_VERSION = 1

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_INCONCLUSIVE = 0, 2, 3, 4


class InputError(Exception):
    """Malformed user input; maps to exit code 2."""


# --------------------------------------------------------------------------- state files

def _pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _jsonable_meta(meta: dict) -> dict:
    return json.loads(json.dumps(meta, default=float))


def state_to_dict(rho: DensityMatrix) -> dict:
    return {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "dims": list(rho.dims),
        "matrix": _pairs(rho.matrix),
        "metadata": _jsonable_meta(rho.meta or {}),
    }


def dumps_state(rho: DensityMatrix) -> str:
    # json writes floats with repr, the shortest string that round-trips bit-exactly
    return json.dumps(state_to_dict(rho), indent=1) + "\n"


def save_state(rho: DensityMatrix, path: str | Path) -> None:
    Path(path).write_text(dumps_state(rho), encoding="utf-8")


def _matrix_from_pairs(rows: Any, what: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{what} must be a non-empty list of rows")
    n = len(rows)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InputError(f"{what} row {i} must hold {n} entries")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                raise InputError(f"{what} entry ({i}, {j}) must be a [re, im] pair of numbers")
            out[i, j] = complex(z[0], z[1])
    return out


def _parse_json(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def loads_state(text: str, source: str = "<string>") -> DensityMatrix:
    data = _parse_json(text, source)
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected a JSON object")
    if data.get("format", STATE_FORMAT) != STATE_FORMAT:
        raise InputError(f"{source}: unsupported format {data.get('format')!r}")
    if data.get("version", STATE_VERSION) != STATE_VERSION:
        raise InputError(f"{source}: unsupported version {data.get('version')!r}")
    dims = data.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise InputError(f"{source}: 'dims' must be a list of positive integers")
    m = _matrix_from_pairs(data.get("matrix"), f"{source}: matrix")
    if m.shape[0] != int(np.prod(dims)):
        raise InputError(f"{source}: matrix size {m.shape[0]} does not match dims {dims}")
    meta = data.get("metadata") or {}
    if not isinstance(meta, dict):
        raise InputError(f"{source}: 'metadata' must be an object")
    return DensityMatrix(m, tuple(dims), meta)


def load_state(path: str | Path) -> DensityMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return loads_state(text, str(path))


# --------------------------------------------------------------------------- rendering

def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    return x


def to_json(obj: dict) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def _table(rows: Sequence[tuple[str, Any]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {_fmt(v)}" for k, v in rows)


def _grid(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [list(header)] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


# --------------------------------------------------------------------------- inputs

def _parse_params(items: Sequence[str] | None) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InputError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise InputError(f"--param {key}: {value!r} is not a number") from None
    return out


def _get_state(args) -> DensityMatrix:
    if args.state and args.catalog:
        raise InputError("give either --state or --catalog, not both")
    if args.state:
        return load_state(args.state)
    if args.catalog:
        try:
            return catalog(args.catalog, **_parse_params(args.param))
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
        except TypeError as exc:
            raise InputError(f"bad parameters for {args.catalog}: {exc}") from None
    raise InputError("no input state: use --state FILE or --catalog NAME")


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _get_pair(args, rho: DensityMatrix, required: bool = True) -> HamiltonianPair | None:
    if getattr(args, "pair", None):
        data = _parse_json(Path(args.pair).read_text(encoding="utf-8"), args.pair)
        if not isinstance(data, dict) or "h_a" not in data or "g_b" not in data:
            raise InputError(f"{args.pair}: expected an object with 'h_a' and 'g_b'")
        return HamiltonianPair(_matrix_from_pairs(data["h_a"], "h_a"), _matrix_from_pairs(data["g_b"], "g_b"))
    h, g = getattr(args, "h_diag", None), getattr(args, "g_diag", None)
    if h or g:
        if not (h and g):
            raise InputError("--h-diag and --g-diag must be given together")
        return HamiltonianPair.diagonal(_floats(h, "--h-diag"), _floats(g, "--g-diag"))
    if not required:
        return None
    found = find_wa_pair(rho, bound=args.search_bound)
    if not found.found:
        raise InputError(f"no weak-anonymity witness found ({found.status}); pass --h-diag/--g-diag or --pair")
    return found.pair


def _env(name: str, default=None):
    return os.environ.get(f"ANONMET_{name}", default)


def _env_flag(name: str) -> bool:
    return str(_env(name, "")).strip().lower() in {"1", "true", "yes", "on"}


def _tol_overrides(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        for part in filter(None, (p.strip() for p in item.split(","))):
            key, sep, value = part.partition("=")
            if not sep:
                raise InputError(f"--tol expects name=value, got {part!r}")
            try:
                out[key] = float(value)
            except ValueError:
                raise InputError(f"--tol {key}: {value!r} is not a number") from None
    return out


# --------------------------------------------------------------------------- commands

def cmd_classify(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    if args.random_bases < 0:
        raise InputError("--random-bases must be non-negative")
    report = classify(rho, bound=args.search_bound, n_random=args.random_bases, seed=args.seed)
    d = report.to_dict()
    rows = [
        ("aligned discord (WA)", report.aligned_discord),
        ("aligned entanglement (SA)", report.aligned_entanglement),
        ("entangled (NPT)", report.entangled),
        ("WA search", report.wa.status),
        ("SA search", report.sa.status),
        ("min PT eigenvalue", report.ppt.min_pt_eigenvalue),
        ("classical CC/CQ/QC", "/".join(_fmt(x) for x in (report.classical.cc, report.classical.cq,
                                                          report.classical.qc))),
    ]
    if report.wa.found:
        rows.append(("WA witness spectra", f"H {report.wa.spectra[0]}  G {report.wa.spectra[1]}"))
    text = _table(rows)
    if report.notes:
        text += "\n" + "\n".join(f"note: {n}" for n in report.notes)
    return d, text, report.inconclusive


def _hamiltonian(args, d: int) -> np.ndarray:
    if args.h_diag:
        h = np.diag(_floats(args.h_diag, "--h-diag")).astype(complex)
    elif args.hamiltonian:
        data = _parse_json(Path(args.hamiltonian).read_text(encoding="utf-8"), args.hamiltonian)
        h = _matrix_from_pairs(data, "hamiltonian")
    else:
        raise InputError("modes needs --h-diag or --hamiltonian")
    if h.shape != (d, d):
        raise InputError(f"generator of size {h.shape[0]} does not match subsystem dimension {d}")
    return h


def cmd_modes(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    site = 0 if args.side == "A" else 1
    if site >= len(rho.dims):
        raise InputError(f"state has no subsystem {args.side}")
    h = _hamiltonian(args, rho.dims[site])
    dec = mode_decompose(rho, h, args.side)
    residual = dec.completeness_residual(rho)
    rows = []
    for omega, m in sorted(dec.modes.items()):
        row = {"omega": omega, "norm": float(np.linalg.norm(m))}
        if args.show_matrix:
            row["matrix"] = _pairs(m)
        rows.append(row)
    if not args.all:
        rows = [r for r in rows if r["norm"] > TOL.holds]
    d = {"schema": "anonmet.modes/1", "side": args.side, "completeness_residual": residual, "modes": rows}
    text = _grid(["omega", "norm"], [(r["omega"], r["norm"]) for r in rows])
    text += f"\ncompleteness residual  {residual:.3g}"
    return d, text, False


def cmd_merit(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    if args.optimize:
        res = state_merit(rho, direction=args.direction or "max", restarts=args.restarts,
                          steps=args.steps, seed=args.seed, grid=min(args.grid_points, 64))
        d = res.to_dict()
        if args.direction is None:
            d.pop("note")
        text = _table([("direction", res.direction), ("merit", res.value), ("evaluations", res.evaluations)])
        if "note" in d:
            text += f"\nnote: {res.note}"
        return d, text, False
    pair = _get_pair(args, rho)
    rep = figure_of_merit(rho, pair, grid=args.grid_points, delta=args.delta)
    d = rep.to_dict()
    if args.direction is not None:
        d["note"] = DIRECTION_NOTE
    text = _table([
        ("QFI (A)", rep.qfi_a), ("QFI (B)", rep.qfi_b), ("average QFI", rep.avg_qfi),
        ("min fidelity", rep.min_fidelity), ("argmin theta", rep.argmin_theta),
        ("delta", rep.delta), ("n_delta", rep.n_delta), ("merit", rep.merit),
    ])
    return d, text, False


def cmd_simulate(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    pair = _get_pair(args, rho)
    if args.trials <= 1:
        tr = run_protocol(rho, pair, args.encoder, args.theta, args.copies, args.seed)
        d = tr.to_dict()
        text = _table([(k, v) for k, v in d.items() if k != "schema"])
        return d, text, False
    correct = 0
    for k in range(args.trials):
        tr = run_protocol(rho, pair, args.encoder, args.theta, args.copies, args.seed + k)
        correct += tr.charlie_guess == args.encoder
    d = {
        "schema": "anonmet.trials/1",
        "encoder": args.encoder,
        "theta_true": args.theta,
        "n_copies": args.copies,
        "seed": args.seed,
        "trials": args.trials,
        "guess_accuracy": correct / args.trials,
        "helstrom_optimal_prob": tr.helstrom_optimal_prob,
        "charlie_guess_prob_bound": tr.charlie_guess_prob_bound,
    }
    text = _table([(k, v) for k, v in d.items() if k != "schema"])
    return d, text, False


def cmd_robustness(args) -> tuple[dict, str, bool]:
    copies = [int(n) for n in _floats(args.copies, "--copies")]
    if any(n < 1 for n in copies):
        raise InputError("--copies entries must be positive")
    rep = robustness_bounds(args.epsilon, copies)
    d = rep.to_dict()
    text = _table([("epsilon", rep.epsilon), ("WA guess bound", rep.wa_guess_bound),
                   ("SA guess bound", rep.sa_guess_bound)])
    text += "\n" + _grid(["n", "WA bound", "SA bound"], rep.multicopy_bounds)
    return d, text, False


def cmd_attack(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    pair = _get_pair(args, rho, required=False)
    res = purification_attack(rho, pair, args.theta, grid=args.grid_points)
    d = {"schema": "anonmet.attack/1", "theta": args.theta, **res._asdict()}
    return d, _table(list(res._asdict().items())), False


def cmd_save(args) -> tuple[dict, str, bool]:
    rho = _get_state(args)
    save_state(rho, args.out)
    d = {"schema": "anonmet.saved/1", "path": str(args.out), "dims": list(rho.dims)}
    return d, f"wrote {args.out}", False


def cmd_catalog(args) -> tuple[dict, str, bool]:
    names = sorted(CATALOG)
    return {"schema": "anonmet.catalog/1", "states": names}, "\n".join(names), False


# --------------------------------------------------------------------------- parser

def _common(with_state: bool = True, with_pair: bool = False) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance, e.g. holds=1e-9 (repeatable)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--search-bound", type=int, default=None)
    g.add_argument("--grid-points", type=int, default=None)
    g.add_argument("--json", action="store_true", default=None, help="machine-readable output")
    g.add_argument("--strict", action="store_true", default=None, help="exit 4 on inconclusive results")
    if with_state:
        s = p.add_argument_group("state")
        s.add_argument("--state", metavar="FILE", help="state file (JSON)")
        s.add_argument("--catalog", metavar="NAME", help="named catalog state")
        s.add_argument("--param", action="append", metavar="KEY=VALUE", help="catalog parameter")
    if with_pair:
        q = p.add_argument_group("generators (default: search for a witness)")
        q.add_argument("--h-diag", metavar="LIST", help="diagonal of H_A, comma separated")
        q.add_argument("--g-diag", metavar="LIST", help="diagonal of G_B, comma separated")
        q.add_argument("--pair", metavar="FILE", help="JSON object with h_a and g_b matrices")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anonmet", description="Anonymous metrology toolkit.")
    parser.add_argument("--version", action="version", version=f"anonmet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[_common()], help="WA/SA/entanglement/discord report")
    p.add_argument("--random-bases", type=int, default=0, metavar="N",
                   help="also try N random local bases when a marginal is degenerate (e.g. 1000)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("modes", parents=[_common()], help="mode decomposition under one generator")
    p.add_argument("--side", choices=["A", "B"], default="A")
    p.add_argument("--h-diag", metavar="LIST")
    p.add_argument("--hamiltonian", metavar="FILE", help="JSON matrix of [re, im] pairs")
    p.add_argument("--show-matrix", action="store_true")
    p.add_argument("--all", action="store_true", help="also list modes with zero norm")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("merit", parents=[_common(with_pair=True)], help="figure of merit")
    p.add_argument("--optimize", action="store_true", help="optimise over generator pairs")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--direction", choices=["min", "max"], default=None)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--steps", type=int, default=200)
    p.set_defaults(func=cmd_merit)

    p = sub.add_parser("simulate", parents=[_common(with_pair=True)], help="run the protocol")
    p.add_argument("--encoder", choices=["A", "B"], default="A")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--copies", type=int, default=200)
    p.add_argument("--trials", type=int, default=1, help="repeat with seeds seed, seed+1, ...")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("robustness", parents=[_common(with_state=False)], help="perturbation bounds")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--copies", default="1,2,4,8,16", metavar="LIST")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("attack", parents=[_common(with_pair=True)], help="purification attack")
    p.add_argument("--theta", type=float, default=1.0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("save", parents=[_common()], help="write a state file")
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=cmd_save)

    p = sub.add_parser("catalog", parents=[_common(with_state=False)], help="list catalog states")
    p.set_defaults(func=cmd_catalog)
    return parser


def _apply_env(args) -> None:
    def pick(flag, env, cast, default):
        if flag is not None:
            return flag
        raw = _env(env)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError:
            raise InputError(f"ANONMET_{env}={raw!r} is not valid") from None

    args.seed = pick(args.seed, "SEED", int, 0)
    args.search_bound = pick(args.search_bound, "SEARCH_BOUND", int, 3)
    args.grid_points = pick(args.grid_points, "GRID_POINTS", int, 256)
    args.json = bool(args.json) or _env_flag("JSON")
    args.strict = bool(args.strict) or _env_flag("STRICT")
    env_tol = _env("TOL")
    args.tol = ([env_tol] if env_tol else []) + list(args.tol)
    if args.search_bound < 1:
        raise InputError("--search-bound must be at least 1")
    if args.grid_points < 1:
        raise InputError("--grid-points must be at least 1")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    saved = dataclasses.asdict(TOL)
    try:
        _apply_env(args)
        configure(**_tol_overrides(args.tol))
        data, text, inconclusive = args.func(args)
    except StateError as exc:
        residuals = ", ".join(f"{k}={v:.3g}" for k, v in sorted(exc.residuals.items()))
        print(f"error: {exc} ({residuals})", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        configure(**saved)
    print(to_json(data) if args.json else text)
    if args.strict and inconclusive:
        print("inconclusive result", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
