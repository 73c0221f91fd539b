"""Command-line interface: ``genjulia <command> <sequence.json> [options]``.

Results are written as deterministic JSON (scalars and tables) or CSV
(grids and point clouds).  Exit codes: 0 success, 2 input error,
3 numerical failure, 4 precondition violation; failures print a single
JSON object to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from fractions import Fraction

import jsonschema
import numpy as np

from . import __version__
from .exceptions import GenJuliaError, InternalConsistencyError, PreconditionError, RootFindingError
from .k1_gamma import GammaSequence, diagnostic_rows, capacity_closed_form, pw_sum, smoothness_verdict
from .measure import preimage_measure, support_radius
from .orthopoly import explicit_P1, explicit_P_block, jacobi_from_moments, moments, resolvent
from .poly_core import EXTENDED, FLOAT64, RATIONAL
from .real_julia import basic_intervals, cantor_diagnostics
from .sequence import CompositionTower, RegularSequenceSpec, capacity, green, validate_regularity

COMMANDS = ("validate", "capacity", "green-grid", "measure", "moments", "opoly", "jacobi",
            "resolvent", "intervals", "k1-smoothness", "k1-pw")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4

_SCALAR = {"oneOf": [{"type": "string", "minLength": 1}, {"type": "number"}]}
_COEFFS = {"type": "array", "items": _SCALAR, "minItems": 3}
_CONSTANTS = {
    "type": "object",
    "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in ("A1", "A2", "A3")},
    "additionalProperties": False,
}

SEQUENCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "oneOf": [
        {"type": "object", "required": ["family", "polynomials"], "additionalProperties": False,
         "properties": {"family": {"const": "explicit"},
                        "polynomials": {"type": "array", "items": _COEFFS, "minItems": 1},
                        "tail": {"enum": ["repeat-last", "repeat-cycle"]},
                        "constants": _CONSTANTS}},
        {"type": "object", "required": ["family", "c"], "additionalProperties": False,
         "properties": {"family": {"const": "quadratic_c"},
                        "c": {"type": "array", "items": _SCALAR, "minItems": 1},
                        "tail": {"enum": ["repeat-last", "repeat-cycle"]},
                        "constants": _CONSTANTS}},
        {"type": "object", "required": ["family"], "additionalProperties": False,
         "properties": {"family": {"const": "k1_gamma"},
                        "gamma": {"type": "array", "items": _SCALAR},
                        "tail": {"enum": ["repeat-last", "repeat-cycle", "explicit-finite",
                                          "eps-geometric", "eps-power"]},
                        "eps": {"type": "array", "items": _SCALAR, "minItems": 2, "maxItems": 3},
                        "constants": _CONSTANTS}},
        {"type": "object", "required": ["family", "polynomial"], "additionalProperties": False,
         "properties": {"family": {"const": "autonomous"},
                        "polynomial": _COEFFS,
                        "constants": _CONSTANTS}},
    ],
}

_NUM_OR_STR = {"type": ["number", "string", "null"]}
RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "metadata", "result"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "metadata": {
            "type": "object",
            "required": ["input_sha256", "precision", "levels", "error_estimates", "version"],
            "properties": {
                "input_sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                "precision": {"type": "string"},
                "levels": {"type": ["integer", "null"]},
                "error_estimates": {"type": "object", "additionalProperties": _NUM_OR_STR},
                "version": {"type": "string"},
            },
        },
        "result": {"type": "object"},
    },
}


class InputError(GenJuliaError):
    """Malformed command line or sequence file."""


def _scalar_text(v):
    if isinstance(v, str):
        return v
    return repr(v)


def _parse_scalar(v):
    text = _scalar_text(v)
    try:
        return Fraction(text)
    except ValueError:
        return text


def _schema_error(err: jsonschema.ValidationError, data) -> str:
    best = jsonschema.exceptions.best_match([err]) or err
    where = "/".join(str(p) for p in best.absolute_path) or "<root>"
    family = data.get("family") if isinstance(data, dict) else None
    return f"field {where}: {best.message} (family={family!r})"


def parse_sequence_data(data):
    """Build a sequence object from already-decoded JSON data."""
    try:
        jsonschema.validate(data, SEQUENCE_SCHEMA)
    except jsonschema.ValidationError as err:
        # report against the branch the family tag selects, not the oneOf summary
        families = ["explicit", "quadratic_c", "k1_gamma", "autonomous"]
        if isinstance(data, dict) and data.get("family") in families:
            branch = SEQUENCE_SCHEMA["oneOf"][families.index(data["family"])]
            errs = sorted(jsonschema.Draft202012Validator(branch).iter_errors(data),
                          key=lambda e: list(map(str, e.absolute_path)))
            if errs:
                err = errs[0]
        raise InputError(_schema_error(err, data)) from None
    consts = data.get("constants", {})
    fam = data["family"]
    if fam == "explicit":
        polys = [[_parse_scalar(c) for c in p] for p in data["polynomials"]]
        return RegularSequenceSpec.explicit(polys, data.get("tail", "repeat-last"), **consts)
    if fam == "quadratic_c":
        return RegularSequenceSpec.quadratic_c([_parse_scalar(c) for c in data["c"]],
                                               data.get("tail", "repeat-last"), **consts)
    if fam == "autonomous":
        return RegularSequenceSpec.autonomous([_parse_scalar(c) for c in data["polynomial"]], **consts)
    tail = data.get("tail", "repeat-last")
    head = tuple(_parse_scalar(g) for g in data.get("gamma", []))
    if tail.startswith("eps-"):
        if "eps" not in data:
            raise InputError(f"field eps: required for tail {tail!r}")
        params = tuple(_parse_scalar(p) for p in data["eps"])
        need = 2 if tail == "eps-geometric" else 3
        if len(params) != need:
            raise InputError(f"field eps: {tail} takes {need} parameters")
        gs = GammaSequence(head, tail, params)
    else:
        if "eps" in data:
            raise InputError(f"field eps: not allowed with tail {tail!r}")
        gs = GammaSequence(head, tail)
    if consts:
        return gs.to_spec(**consts)
    return gs


def parse_sequence_file(path):
    """Read and validate a JSON sequence file.

    Returns a :class:`RegularSequenceSpec` or a :class:`GammaSequence`.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except UnicodeDecodeError as exc:
        raise InputError(f"input is not UTF-8: {exc}") from None
    return parse_sequence_data(data)


# -- deterministic output ------------------------------------------------------

def fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    return s if ("e" in s or "." in s) else s + ".0"


def _emit(v, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        out.write("null")
    elif isinstance(v, bool) or isinstance(v, np.bool_):
        out.write("true" if v else "false")
    elif isinstance(v, (int, np.integer)):
        out.write(str(int(v)))
    elif isinstance(v, Fraction):
        out.write(json.dumps(str(v)))
    elif isinstance(v, (float, np.floating)):
        out.write(fmt_float(float(v)))
    elif isinstance(v, (complex, np.complexfloating)):
        _emit([float(v.real), float(v.imag)], out, indent, level)
    elif isinstance(v, str):
        out.write(json.dumps(v))
    elif isinstance(v, dict):
        if not v:
            out.write("{}")
            return
        out.write("{\n")
        items = sorted(v.items())
        for i, (k, x) in enumerate(items):
            out.write(pad + json.dumps(str(k)) + ": ")
            _emit(x, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            out.write("[]")
            return
        out.write("[")
        for i, x in enumerate(v):
            if i:
                out.write(", ")
            _emit(x, out, indent, level + 1)
        out.write("]")
    elif type(v).__module__.startswith("mpmath"):
        c = complex(v)
        _emit(c.real if c.imag == 0 else c, out, indent, level)
    else:
        raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, ``"p/q"`` rationals."""
    out = io.StringIO()
    _emit(obj, out, 2, 0)
    out.write("\n")
    return out.getvalue()


def validate_result(obj) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``obj`` fits the result schema."""
    jsonschema.validate(obj, RESULT_SCHEMA)


def _csv(meta: dict, header, rows) -> str:
    out = io.StringIO()
    for k in sorted(meta):
        val = meta[k]
        if isinstance(val, dict):
            val = ";".join(f"{a}={_cell(b)}" for a, b in sorted(val.items()))
        out.write(f"# {k}: {val}\n")
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(_cell(c) for c in r) + "\n")
    return out.getvalue()


def _cell(c):
    if isinstance(c, (bool, np.bool_)):
        return "1" if c else "0"
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    if isinstance(c, Fraction):
        return str(c)
    if c is None:
        return ""
    if isinstance(c, str):
        return c
    return fmt_float(float(c)).strip('"')


# -- commands ------------------------------------------------------------------

def _parse_precision(text):
    if text == "f64":
        return FLOAT64, None
    if text == "rational":
        return RATIONAL, None
    if text.startswith("ext:"):
        try:
            bits = int(text[4:])
        except ValueError:
            raise InputError(f"bad precision {text!r}; expected ext:<bits>") from None
        if bits < 53:
            raise InputError("ext:<bits> needs bits >= 53")
        return EXTENDED, bits
    raise InputError(f"bad precision {text!r}; expected f64, ext:<bits> or rational")


def _tower(seq):
    if isinstance(seq, GammaSequence):
        return seq.tower()
    return CompositionTower(seq)


def _need_gamma(seq, cmd):
    if isinstance(seq, RegularSequenceSpec) and seq.family == "k1_gamma":
        return seq.gamma
    if not isinstance(seq, GammaSequence):
        raise PreconditionError(f"{cmd} needs a k1_gamma sequence")
    return seq


def _only(prec, cmd, allowed):
    if prec[0] not in allowed:
        raise PreconditionError(f"{cmd} supports precision {', '.join(allowed)}; got {prec[0]}")


def _poly_json(p):
    return [c if isinstance(c, Fraction) else complex(c) for c in p.coeffs]


def _scalar_json(c):
    if isinstance(c, Fraction):
        return c
    c = complex(c)
    return c.real if c.imag == 0 else c


def cmd_validate(seq, args, prec):
    tower = _tower(seq)
    spec = tower.spec
    rep = validate_regularity(spec, args.horizon)
    res = {"passed": rep.passed, "horizon": rep.horizon,
           "witnesses": {"A1": rep.min_leading, "A2": rep.max_ratio, "A3": rep.max_log_leading_per_degree},
           "constants": {"A1": spec.A1, "A2": spec.A2, "A3": spec.A3},
           "escape_radius": spec.escape_radius,
           "violations": [v["message"] for v in rep.violations]}
    return res, rep.horizon, {}


def cmd_capacity(seq, args, prec):
    tower = _tower(seq)
    cap = capacity(tower, args.tol)
    res = {"capacity": cap.value, "diverged": cap.diverged}
    if isinstance(seq, GammaSequence):
        res["closed_form"] = capacity_closed_form(seq, args.tol).value
    return res, cap.levels, {"tail_bound": cap.tail_bound}


def cmd_green_grid(seq, args, prec):
    tower = _tower(seq)
    xs = np.linspace(args.xmin, args.xmax, args.nx)
    ys = np.linspace(args.ymin, args.ymax, args.ny)
    rows, worst = [], 0.0
    for y in ys:
        for x in xs:
            g = green(tower, complex(x, y), args.kmax)
            worst = max(worst, g.error_estimate)
            rows.append((x, y, g.value, g.error_estimate, g.escaped))
    return ("csv", ["x", "y", "green", "error_estimate", "escaped"], rows), args.kmax, \
        {"max_error_estimate": worst}


def cmd_measure(seq, args, prec):
    tower = _tower(seq)
    anchor = complex(args.anchor) if args.anchor is not None else None
    m = preimage_measure(tower, anchor, args.levels)
    rows = [(p.real, p.imag, m.weight) for p in m.points]
    return ("csv", ["re", "im", "weight"], rows), args.levels, {"anchor": complex(m.anchor).real}


def cmd_moments(seq, args, prec):
    tower = _tower(seq)
    mt = moments(tower, args.levels, prec[0], prec[1])
    return {"moments": [_scalar_json(c) for c in mt.moments], "mode": mt.mode,
            "cumulative_degree": mt.degree}, args.levels, {"moment_index_limit": mt.degree - 1}


def cmd_opoly(seq, args, prec):
    tower = _tower(seq)
    if args.precision:
        _only(prec, "opoly", (RATIONAL,))
    P1 = explicit_P1(tower.spec)
    Pb = explicit_P_block(tower, args.levels)
    return {"P_1": _poly_json(P1.polynomial),
            "index": Pb.index, "P_block": _poly_json(Pb.polynomial)}, args.levels, {}


def cmd_jacobi(seq, args, prec):
    tower = _tower(seq)
    mt = moments(tower, args.levels, prec[0], prec[1])
    jc = jacobi_from_moments(mt, args.N)
    return {"a_squared": [_scalar_json(v) for v in jc.a_squared],
            "b": [_scalar_json(v) for v in jc.b],
            "hankel_dets": [_scalar_json(v) for v in jc.hankel_dets],
            "mode": jc.mode}, args.levels, {}


def _parse_complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise InputError(f"bad complex number {text!r}") from None


def cmd_resolvent(seq, args, prec):
    tower = _tower(seq)
    mt = moments(tower, args.levels, prec[0], prec[1])
    M = args.support_radius
    if M is None:
        M = support_radius(preimage_measure(tower, None, args.measure_levels))
    ev = resolvent(mt, _parse_complex(args.z), args.truncation, M)
    return {"z": ev.z, "value": ev.value, "truncation": ev.truncation, "support_radius": M}, \
        args.levels, {"tail_bound": ev.tail_bound}


def cmd_intervals(seq, args, prec):
    tower = _tower(seq)
    bits = prec[1] if prec[0] == EXTENDED else None
    sysm = basic_intervals(tower, args.levels, bits)
    rep = cantor_diagnostics(sysm)
    out = sysm.to_json()
    out.update({"max_length": rep.max_length, "total_length": rep.total_length,
                "min_gap": rep.min_gap, "nesting_ok": sysm.nesting_ok()})
    return out, args.levels, {}


def cmd_k1_smoothness(seq, args, prec):
    gs = _need_gamma(seq, "k1-smoothness")
    v = smoothness_verdict(gs, args.horizon)
    return {"verdict": v.verdict, "reason": v.reason, "partial_sums": v.partial_sums,
            "four_n_delta": v.four_n_delta}, args.horizon, {}


def cmd_k1_pw(seq, args, prec):
    gs = _need_gamma(seq, "k1-pw")
    rows = diagnostic_rows(gs, args.N, args.depth)
    pw = pw_sum(gs, args.N, args.depth)
    return ("csv", ["n", "gamma", "eps", "delta", "l1", "s", "S"], rows), args.N, \
        {"max_term_error": max(pw.error_estimates),
         "lower_bound_holds": pw.lower_bound_holds}


HANDLERS = {
    "validate": cmd_validate, "capacity": cmd_capacity, "green-grid": cmd_green_grid,
    "measure": cmd_measure, "moments": cmd_moments, "opoly": cmd_opoly, "jacobi": cmd_jacobi,
    "resolvent": cmd_resolvent, "intervals": cmd_intervals,
    "k1-smoothness": cmd_k1_smoothness, "k1-pw": cmd_k1_pw,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="genjulia", description="Orthogonal polynomials on generalized Julia sets")
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("input", help="JSON sequence file")
    common.add_argument("-o", "--output", help="output path (default: stdout)")
    common.add_argument("--precision", default=None, help="f64 | ext:<bits> | rational")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common])
    s.add_argument("--horizon", type=_positive_int, default=50)
    s = sub.add_parser("capacity", parents=[common])
    s.add_argument("--tol", type=float, default=1e-14)
    s = sub.add_parser("green-grid", parents=[common])
    s.add_argument("--xmin", type=float, default=-2.0)
    s.add_argument("--xmax", type=float, default=2.0)
    s.add_argument("--ymin", type=float, default=-2.0)
    s.add_argument("--ymax", type=float, default=2.0)
    s.add_argument("--nx", type=_positive_int, default=101)
    s.add_argument("--ny", type=_positive_int, default=101)
    s.add_argument("--kmax", type=_positive_int, default=60)
    s = sub.add_parser("measure", parents=[common])
    s.add_argument("--levels", type=_positive_int, default=10)
    s.add_argument("--anchor", default=None)
    for name in ("moments", "opoly"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--levels", type=_positive_int, default=3)
    s = sub.add_parser("jacobi", parents=[common])
    s.add_argument("--levels", type=_positive_int, default=4)
    s.add_argument("-N", type=_positive_int, default=5)
    s = sub.add_parser("resolvent", parents=[common])
    s.add_argument("--levels", type=_positive_int, default=6)
    s.add_argument("--z", required=True, help="complex point, e.g. 2 or 1+2j")
    s.add_argument("--truncation", type=int, default=None)
    s.add_argument("--support-radius", type=float, default=None)
    s.add_argument("--measure-levels", type=_positive_int, default=12)
    s = sub.add_parser("intervals", parents=[common])
    s.add_argument("--levels", type=int, default=4)
    s = sub.add_parser("k1-smoothness", parents=[common])
    s.add_argument("--horizon", type=_positive_int, default=30)
    s = sub.add_parser("k1-pw", parents=[common])
    s.add_argument("-N", type=_positive_int, default=25)
    s.add_argument("--depth", type=int, default=None)
    return p


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    """Entry point; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
        prec = _parse_precision(args.precision) if args.precision else (None, None)
        seq = parse_sequence_file(args.input)
        with open(args.input, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        payload, levels, errors = HANDLERS[args.command](seq, args, prec)
    except InputError as exc:
        return _fail(EXIT_INPUT, exc)
    except (RootFindingError, InternalConsistencyError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except PreconditionError as exc:
        return _fail(EXIT_PRECONDITION, exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    meta = {"input_sha256": digest, "precision": args.precision or "default",
            "levels": levels, "error_estimates": errors, "version": __version__,
            "command": args.command}
    if isinstance(payload, tuple) and payload[0] == "csv":
        text = _csv(meta, payload[1], payload[2])
    else:
        meta.pop("command")
        text = dumps({"command": args.command, "metadata": meta, "result": payload})
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
