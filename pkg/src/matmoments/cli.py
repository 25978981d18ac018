"""Command-line surface.

Commands: validate, determinacy, coeffs, transform, density, generate.
Exit codes: 0 success (solvable / determinate / artifacts written),
1 I/O, format, or configuration error, 2 solvability rejected,
3 indeterminate, 4 inconclusive, 5 computation error (machine-readable
cause on stderr).  Outputs are byte-deterministic for a fixed
configuration and precision.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .cayley import (
    DETERMINATE,
    INDETERMINATE,
    SectionPolicy,
    classify_determinacy,
)
from .coefficients import EPS_POLE
from .errors import (
    ExcludedPointError,
    HalfPlaneError,
    MomentFileError,
    MomentProblemError,
)
from .moments import load_moments, save_moments, validate_solvability, with_precision
from .reference import (
    atomic_moments,
    block_diag_moments,
    gaussian_moments,
    lognormal_moments,
    point_mass,
    two_atom_measure,
    zero_moments,
)
from .transform import (
    ConvergencePolicy,
    SchurParameter,
    build_section,
    convergence_driver,
    stieltjes_invert,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_REJECTED = 2
EXIT_INDETERMINATE = 3
EXIT_INCONCLUSIVE = 4
EXIT_COMPUTE = 5

REFERENCE_GRID = (2j, 1 + 1j, -1 + 2j)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage, which collides with the rejected
    verdict; remap usage errors to the I/O/format code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_IO)


class ConfigError(Exception):
    pass


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        _emit_error("config", exc)
        return EXIT_IO
    except (MomentFileError, OSError) as exc:
        _emit_error("io-format", exc)
        return EXIT_IO
    except MomentProblemError as exc:
        _emit_error(_kebab(type(exc).__name__), exc)
        return EXIT_COMPUTE


def _emit_error(code, exc):
    sys.stderr.write(json.dumps({"error": code, "message": str(exc)}, sort_keys=True) + "\n")


def _kebab(name):
    out = []
    for ch in name.removesuffix("Error"):
        if ch.isupper() and out:
            out.append("-")
        out.append(ch.lower())
    return "".join(out)


def _build_parser():
    parser = _Parser(prog="matmoments", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("--input", required=True, help="moment JSON file")
        if output:
            p.add_argument("--output", help="write the report/artifact here as well")
        p.add_argument("--precision-bits", type=int, default=None,
                       help="override the file's working precision (>= 53)")

    p = sub.add_parser("validate", help="check Hankel positive semidefiniteness")
    common(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("determinacy", help="classify determinate/indeterminate")
    common(p)
    p.add_argument("--max-section", type=int, default=64)
    p.add_argument("--tol", type=float, default=None,
                   help="residual threshold (relative); default scales with precision")
    p.set_defaults(handler=cmd_determinacy)

    p = sub.add_parser("coeffs", help="coefficient matrices on a grid (CSV)")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--max-section", type=int, default=32,
                   help="section size used for the evaluation")
    p.set_defaults(handler=cmd_coeffs)

    p = sub.add_parser("transform", help="converged transform samples on a grid (CSV)")
    common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--schur", default="zero")
    p.add_argument("--max-section", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(handler=cmd_transform)

    p = sub.add_parser("density", help="recover density/cumulative on an interval (CSV)")
    common(p)
    p.add_argument("--interval", required=True, help="a:b")
    p.add_argument("--step", type=float, default=None, help="grid step (default (b-a)*1e-4)")
    p.add_argument("--epsilon", type=float, default=1e-3, help="imaginary offset")
    p.add_argument("--schur", default="zero")
    p.add_argument("--max-section", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("generate", help="emit a reference moment file")
    p.add_argument("--family", required=True,
                   choices=["two-atom", "point-mass", "gaussian", "lognormal",
                            "block-diag", "zero"])
    p.add_argument("--count", type=int, default=33)
    p.add_argument("--precision-bits", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(handler=cmd_generate)

    return parser


def _load(args):
    seq = load_moments(args.input)
    bits = getattr(args, "precision_bits", None)
    if bits is not None:
        if bits < 53:
            raise ConfigError("--precision-bits must be >= 53")
        seq = with_precision(seq, bits)
    return seq


def _check_pow2(value, name):
    if value < 2 or value & (value - 1):
        raise ConfigError(f"{name} must be a power of two >= 2, got {value}")
    return value


def _write_json(args, payload):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_validate(args):
    seq = _load(args)
    report = validate_solvability(seq, seq.max_gamma_order)
    _write_json(args, report.to_json_dict())
    return EXIT_OK if report.is_solvable else EXIT_REJECTED


def cmd_determinacy(args):
    seq = _load(args)
    policy = SectionPolicy(
        initial_section=min(16, _check_pow2(args.max_section, "--max-section")),
        max_section=args.max_section,
        threshold=args.tol,
    )
    verdict = classify_determinacy(seq, policy)
    _write_json(args, verdict.to_json_dict())
    if verdict.verdict == DETERMINATE:
        return EXIT_OK
    if verdict.verdict == INDETERMINATE:
        return EXIT_INDETERMINATE
    return EXIT_INCONCLUSIVE


def _parse_grid(text):
    text = text.strip()
    if text.startswith("rect:"):
        parts = text[5:].split(":")
        if len(parts) != 5:
            raise ConfigError("rectangle grid is rect:re0:re1:im0:im1:step")
        re0, re1, im0, im1, step = (float(x) for x in parts)
        if step <= 0 or re1 < re0 or im1 < im0:
            raise ConfigError("rectangle grid needs step > 0 and ordered bounds")
        grid = []
        im = im0
        while im <= im1 + 1e-12:
            re = re0
            while re <= re1 + 1e-12:
                grid.append(complex(re, im))
                re += step
            im += step
        return grid
    grid = []
    for token in text.replace(";", ",").split(","):
        token = token.strip()
        if not token:
            continue
        try:
            grid.append(complex(token.replace("i", "j")))
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid point {token!r}") from exc
    if not grid:
        raise ConfigError("empty grid")
    return grid


def _check_grid(grid):
    for z in grid:
        if z.imag <= 0:
            raise HalfPlaneError(f"grid point {z} is not in the open upper half plane")
        if abs(z - 1j) < EPS_POLE:
            raise ExcludedPointError(
                f"grid point {z} lies in the excluded disc of radius {EPS_POLE} "
                "around the excluded point i"
            )
    return grid


def _parse_matrix(text):
    if text.startswith("["):
        data = json.loads(text)
    else:
        with open(text, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    mat = []
    for row in data:
        out_row = []
        for cell in row:
            if isinstance(cell, (list, tuple)):
                out_row.append(complex(float(cell[0]), float(cell[1])))
            else:
                out_row.append(complex(float(cell)))
        mat.append(out_row)
    return np.array(mat, dtype=complex)


def _parse_schur(text):
    text = text.strip()
    if text == "zero":
        return SchurParameter.zero()
    if text.startswith("constant:"):
        return SchurParameter.constant(_parse_matrix(text[len("constant:"):]))
    if text.startswith("moebius:"):
        return SchurParameter.moebius(_parse_matrix(text[len("moebius:"):]))
    raise ConfigError(
        f"unknown schur parameter {text!r}; use zero, constant:<json|path>, moebius:<json|path>"
    )


def _fmt(x):
    return repr(float(x))


def _write_csv(args, header, rows, preamble=None):
    lines = ([preamble] if preamble else []) + [",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_coeffs(args):
    seq = _load(args)
    grid = _check_grid(_parse_grid(args.grid))
    section = build_section(seq, _check_pow2(args.max_section, "--max-section"))
    first = section.coefficients_at(grid[0])
    shapes = {"A": first.a.shape, "B": first.b.shape, "C": first.c.shape, "D": first.d.shape}
    header = ["z_re", "z_im"]
    for name, shape in shapes.items():
        for j in range(shape[0]):
            for k in range(shape[1]):
                header += [f"{name}_{j}_{k}_re", f"{name}_{j}_{k}_im"]
    rows = []
    for z in grid:
        coeffs = section.coefficients_at(z)
        row = [z.real, z.imag]
        for mat in (coeffs.a, coeffs.b, coeffs.c, coeffs.d):
            for val in mat.reshape(-1):
                row += [val.real, val.imag]
        rows.append(row)
    shape_note = " ".join(f"{name}:{s[0]}x{s[1]}" for name, s in shapes.items())
    _write_csv(args, header, rows, preamble=f"# shapes {shape_note}")
    return EXIT_OK


def _converged_section(seq, args, schur):
    policy = ConvergencePolicy(
        initial_section=min(16, _check_pow2(args.max_section, "--max-section")),
        max_section=args.max_section,
        tol=args.tol,
    )
    return convergence_driver(seq, list(REFERENCE_GRID), schur, policy)


def cmd_transform(args):
    seq = _load(args)
    grid = _check_grid(_parse_grid(args.grid))
    schur = _parse_schur(args.schur)
    result = _converged_section(seq, args, schur)
    section = result.section
    n = seq.block_size
    header = ["z_re", "z_im"]
    for j in range(n):
        for k in range(n):
            header += [f"S_{j}_{k}_re", f"S_{j}_{k}_im"]
    rows = []
    for z in grid:
        sample = section.transform_at(z, schur)
        row = [z.real, z.imag]
        for val in sample.s.reshape(-1):
            row += [val.real, val.imag]
        rows.append(row)
    _write_csv(args, header, rows)
    return EXIT_OK


def cmd_density(args):
    seq = _load(args)
    try:
        lo, hi = (float(x) for x in args.interval.split(":"))
    except ValueError as exc:
        raise ConfigError("--interval must be a:b") from exc
    if hi <= lo:
        raise ConfigError("--interval must be increasing")
    step = args.step if args.step is not None else (hi - lo) * 1e-4
    schur = _parse_schur(args.schur)
    result = _converged_section(seq, args, schur)
    section = result.section
    inversion = stieltjes_invert(
        lambda z: section.transform_at(z, schur).s, (lo, hi), step, args.epsilon
    )
    n = seq.block_size
    header = ["lambda"]
    for j in range(n):
        for k in range(n):
            header += [f"M_{j}_{k}_re", f"M_{j}_{k}_im"]
    dens_rows, cum_rows = [], []
    for idx, x in enumerate(inversion.grid):
        drow, crow = [x], [x]
        for val in inversion.density[idx].reshape(-1):
            drow += [val.real, val.imag]
        for val in inversion.cumulative[idx].reshape(-1):
            crow += [val.real, val.imag]
        dens_rows.append(drow)
        cum_rows.append(crow)
    _write_csv(args, header, dens_rows)
    if args.output:
        cum_path = _cumulative_path(args.output)
        lines = [",".join(header)]
        lines += [",".join(_fmt(x) for x in row) for row in cum_rows]
        with open(cum_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cumulative_path(path):
    if path.endswith(".csv"):
        return path[:-4] + "_cumulative.csv"
    return path + "_cumulative"


def cmd_generate(args):
    family = args.family
    count = args.count
    bits = args.precision_bits
    if family == "two-atom":
        seq = atomic_moments(two_atom_measure(), count, precision=bits or 53)
    elif family == "point-mass":
        seq = atomic_moments(point_mass(0.0), count, precision=bits or 53)
    elif family == "gaussian":
        seq = gaussian_moments(count, precision=bits or 53)
    elif family == "lognormal":
        seq = lognormal_moments(count, precision=bits or 256)
    elif family == "block-diag":
        seq = block_diag_moments(count, precision=bits or 256)
    elif family == "zero":
        seq = zero_moments(count, precision=bits or 53)
    else:  # unreachable through argparse choices
        raise ConfigError(f"unknown family {family}")
    save_moments(seq, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
