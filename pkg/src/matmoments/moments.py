"""Moment sequences, block Hankel matrices, and the solvability gate.

A moment sequence is a finite list S_0..S_{L-1} of Hermitian NxN complex
matrices together with a working precision in significand bits.  The
semi-infinite block Hankel matrix built from it is addressed either by
block order (``build_gamma``) or by scalar indices (``hankel_entry``),
where entry (r*N+j, t*N+n) equals entry (j, n) of S_{r+t}.

Positive semidefiniteness of every feasible Hankel section is the
solvability criterion; ``validate_solvability`` checks it to a requested
depth with an eigenvalue tolerance scaled to the working precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpc

from .errors import (
    IndexOutOfRangeError,
    InsufficientMomentsError,
    MomentFileError,
    NonHermitianInputError,
)
from .mputil import eigh_mp, number_from_json, number_to_json, to_mpc

SOLVABLE = "solvable-within-tolerance"
REJECTED = "rejected-at-order"

FILE_SCHEMA_VERSION = 1


class MomentSequence:
    """A prescribed sequence of Hermitian NxN moment matrices.

    Blocks are symmetrized on ingestion when their Hermitian defect is
    below ``2^(-precision/2) * max(1, |S_n|)``, and rejected otherwise.
    Instances are immutable and hashable (they key section caches).
    """

    def __init__(self, moments, block_size=None, precision=53):
        if precision < 1:
            raise ValueError("precision must be a positive bit count")
        blocks = [self._as_rows(m) for m in moments]
        if len(blocks) < 2:
            raise ValueError("need at least S_0 and S_1 (two moments)")
        n = len(blocks[0])
        if block_size is not None and block_size != n:
            raise ValueError(f"block_size {block_size} does not match matrices of size {n}")
        if n < 1:
            raise ValueError("block size must be >= 1")
        with mp.workprec(precision):
            tol = mp.mpf(2) ** (-precision / 2)
            stored = []
            for idx, rows in enumerate(blocks):
                if len(rows) != n or any(len(row) != n for row in rows):
                    raise ValueError(f"moment {idx} is not {n}x{n}")
                scale = max([abs(x) for row in rows for x in row] + [mp.mpf(1)])
                defect = max(
                    abs(rows[j][k] - mp.conj(rows[k][j]))
                    for j in range(n)
                    for k in range(n)
                )
                if defect > tol * scale:
                    raise NonHermitianInputError(
                        f"moment {idx} deviates from Hermitian by {mp.nstr(defect, 5)}"
                    )
                stored.append(
                    tuple(
                        tuple((rows[j][k] + mp.conj(rows[k][j])) / 2 for k in range(n))
                        for j in range(n)
                    )
                )
        self._entries = tuple(stored)
        self._block_size = n
        self._precision = int(precision)

    @staticmethod
    def _as_rows(m):
        if hasattr(m, "rows") and hasattr(m, "cols"):
            return [[to_mpc(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]
        if isinstance(m, (int, float, complex)) or hasattr(m, "_mpf_") or hasattr(m, "_mpc_"):
            return [[to_mpc(m)]]
        return [[to_mpc(x) for x in row] for row in m]

    @property
    def block_size(self):
        return self._block_size

    @property
    def precision(self):
        return self._precision

    @property
    def count(self):
        """Number of supplied moments L."""
        return len(self._entries)

    @property
    def max_gamma_order(self):
        """Deepest n for which the block Hankel section Gamma_n exists."""
        return (self.count - 1) // 2

    @property
    def max_section_size(self):
        """Largest feasible scalar section size M."""
        return self._block_size * ((self.count + 1) // 2)

    def entry(self, n, j, k):
        return self._entries[n][j][k]

    def moment(self, n):
        """Moment S_n as a fresh mpmath matrix."""
        n_ = self._block_size
        out = mp.matrix(n_, n_)
        for j in range(n_):
            for k in range(n_):
                out[j, k] = self._entries[n][j][k]
        return out

    def is_zero(self):
        return all(
            x == 0 for block in self._entries for row in block for x in row
        )

    def __eq__(self, other):
        if not isinstance(other, MomentSequence):
            return NotImplemented
        return (
            self._block_size == other._block_size
            and self._precision == other._precision
            and self._entries == other._entries
        )

    def __hash__(self):
        return hash((self._block_size, self._precision, self._entries))

    def __repr__(self):
        return (
            f"MomentSequence(N={self._block_size}, L={self.count}, "
            f"precision={self._precision})"
        )


@dataclass
class BlockHankel:
    """Finite block Hankel section Gamma_n with blocks S_{r+t}."""

    order: int
    entries: object  # mpmath matrix of size (order+1)*N
    source: MomentSequence


@dataclass
class SolvabilityReport:
    checked_depth: int
    min_eigenvalue_per_order: list
    max_eigenvalue_per_order: list
    verdict: str
    rejected_order: Optional[int] = None
    eps_psd: float = 0.0

    @property
    def is_solvable(self):
        return self.verdict == SOLVABLE

    def to_json_dict(self):
        return {
            "schema_version": FILE_SCHEMA_VERSION,
            "checked_depth": self.checked_depth,
            "min_eigenvalue_per_order": [float(x) for x in self.min_eigenvalue_per_order],
            "max_eigenvalue_per_order": [float(x) for x in self.max_eigenvalue_per_order],
            "verdict": self.verdict,
            "rejected_order": self.rejected_order,
            "eps_psd": float(self.eps_psd),
        }


def hankel_entry(seq: MomentSequence, row: int, col: int):
    """Scalar entry of the semi-infinite Hankel matrix: (rN+j, tN+n) of
    the block matrix is entry (j, n) of S_{r+t}."""
    if row < 0 or col < 0:
        raise IndexOutOfRangeError(f"negative index ({row}, {col})")
    n = seq.block_size
    r, j = divmod(row, n)
    t, k = divmod(col, n)
    if r + t >= seq.count:
        raise IndexOutOfRangeError(
            f"entry ({row}, {col}) needs moment S_{r + t}, only {seq.count} supplied"
        )
    return seq.entry(r + t, j, k)


def build_gamma(seq: MomentSequence, order: int) -> BlockHankel:
    """Assemble the block Hankel section Gamma_order."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if 2 * order > seq.count - 1:
        raise InsufficientMomentsError(
            f"Gamma_{order} needs S_0..S_{2 * order}, only {seq.count} moments supplied"
        )
    n = seq.block_size
    size = (order + 1) * n
    with mp.workprec(seq.precision):
        out = mp.matrix(size, size)
        for r in range(order + 1):
            for t in range(order + 1):
                for j in range(n):
                    for k in range(n):
                        out[r * n + j, t * n + k] = seq.entry(r + t, j, k)
    return BlockHankel(order=order, entries=out, source=seq)


def gamma_section(seq: MomentSequence, size: int):
    """Leading size x size corner of the scalar-indexed Hankel matrix."""
    if size < 1:
        raise ValueError("section size must be >= 1")
    if size > seq.max_section_size:
        raise InsufficientMomentsError(
            f"section size {size} exceeds feasible {seq.max_section_size} "
            f"for {seq.count} moments"
        )
    with mp.workprec(seq.precision):
        out = mp.matrix(size, size)
        for row in range(size):
            for col in range(row, size):
                val = hankel_entry(seq, row, col)
                out[row, col] = val
                if col != row:
                    out[col, row] = mp.conj(val)
    return out


def validate_solvability(seq: MomentSequence, depth: int, eps_psd=None) -> SolvabilityReport:
    """Check Gamma_0..Gamma_depth >= 0 within an eigenvalue tolerance.

    A section is accepted when lambda_min >= -eps_psd * max(lambda_max, 1);
    the default eps_psd is 2^(-precision/2).  The verdict names the first
    rejected order.
    """
    if 2 * depth > seq.count - 1:
        raise InsufficientMomentsError(
            f"depth {depth} needs {2 * depth + 1} moments, only {seq.count} supplied"
        )
    with mp.workprec(seq.precision):
        eps = mp.mpf(2) ** (-seq.precision / 2) if eps_psd is None else mp.mpf(eps_psd)
        mins, maxes = [], []
        rejected_at = None
        for order in range(depth + 1):
            gamma = build_gamma(seq, order)
            evals, _ = eigh_mp(gamma.entries)
            lam_min, lam_max = evals[0], evals[-1]
            mins.append(_safe_float(lam_min))
            maxes.append(_safe_float(lam_max))
            if rejected_at is None and lam_min < -eps * max(lam_max, mp.mpf(1)):
                rejected_at = order
        eps_out = float(eps)
    if rejected_at is None:
        return SolvabilityReport(depth, mins, maxes, SOLVABLE, None, eps_out)
    return SolvabilityReport(depth, mins, maxes, REJECTED, rejected_at, eps_out)


def _safe_float(x):
    try:
        return float(x)
    except OverflowError:
        return float("inf") if x > 0 else float("-inf")


def with_precision(seq: MomentSequence, precision: int) -> MomentSequence:
    """Same moments re-tagged with a different working precision.

    Stored entries are exact binary values, so re-ingestion is lossless
    when the precision grows and rounds once when it shrinks.
    """
    if precision == seq.precision:
        return seq
    n = seq.block_size
    blocks = [
        [[seq.entry(i, j, k) for k in range(n)] for j in range(n)]
        for i in range(seq.count)
    ]
    return MomentSequence(blocks, block_size=n, precision=precision)


def sequence_to_dict(seq: MomentSequence) -> dict:
    """Encode a sequence in the documented JSON schema.  Reals are written
    as decimal strings so multiprecision values survive the round trip."""
    n = seq.block_size
    with mp.workprec(seq.precision):
        moments = [
            [
                [
                    [number_to_json(mp.re(seq.entry(i, j, k))),
                     number_to_json(mp.im(seq.entry(i, j, k)))]
                    for k in range(n)
                ]
                for j in range(n)
            ]
            for i in range(seq.count)
        ]
    return {"N": n, "precision_bits": seq.precision, "moments": moments}


def sequence_from_dict(data: dict) -> MomentSequence:
    try:
        n = int(data["N"])
        precision = int(data.get("precision_bits", 53))
        raw = data["moments"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MomentFileError(f"missing or invalid field: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise MomentFileError("'moments' must be a non-empty list")
    with mp.workprec(precision):
        blocks = []
        for i, mat in enumerate(raw):
            try:
                rows = [
                    [_entry_from_json(mat[j][k]) for k in range(n)]
                    for j in range(n)
                ]
            except (IndexError, TypeError, ValueError) as exc:
                raise MomentFileError(f"moment {i} is not a valid {n}x{n} matrix: {exc}") from exc
            blocks.append(rows)
        try:
            return MomentSequence(blocks, block_size=n, precision=precision)
        except (ValueError, NonHermitianInputError) as exc:
            raise MomentFileError(str(exc)) from exc


def _entry_from_json(val):
    if isinstance(val, (list, tuple)):
        if len(val) != 2:
            raise ValueError(f"complex entry must be [re, im], got {val!r}")
        return mpc(number_from_json(val[0]), number_from_json(val[1]))
    return mpc(number_from_json(val))


def save_moments(seq: MomentSequence, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sequence_to_dict(seq), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_moments(path) -> MomentSequence:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MomentFileError(f"cannot read moment file {path}: {exc}") from exc
    return sequence_from_dict(data)
