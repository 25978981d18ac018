"""Finite sections of the Hilbert space realizing the Hankel Gram matrix.

``embed`` produces coordinates for the generators x_0..x_{M-1} such that
inner(coords[n], coords[m]) reproduces the scalar Hankel entry (n, m)
within working accuracy relative to the norm product
sqrt(Gamma_nn * Gamma_mm), the natural scale of a factorization.
The factorization diagonally equilibrates the section first (fast-growing
moments make the raw section numerically unrankable at any fixed
precision; the scaled section is well conditioned whenever the problem
is), eigendecomposes it, cuts eigenvalues below ``rank_tol`` times the
largest, and rescales the resulting coordinate rows.

The shift x_k -> x_{k+N} acts on these coordinates and defines the
symmetric operator whose deficiency structure the rest of the pipeline
analyses; ``y_vector`` returns the shifted combinations x_{k+N} -+ i x_k.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc

from .errors import EmptyModelError, IndefiniteSectionError, IndexOutOfRangeError
from .mputil import eigh_mp, inner
from .moments import MomentSequence, gamma_section

SIGN_MINUS = "-"
SIGN_PLUS = "+"


@dataclass
class ModelVector:
    """A vector of the coordinate model, tagged by the generator
    combination it represents."""

    coefficients: tuple
    tag: str

    def norm_sq(self):
        return mp.re(inner(self.coefficients, self.coefficients))


class GramModel:
    """Coordinates of x_0..x_{M-1} with prescribed Gram matrix.

    Immutable after construction; ``rank`` is the numerical rank of the
    equilibrated M x M Hankel section under the rank tolerance.
    """

    def __init__(self, section_size, rank, coords, block_size, precision, sequence):
        self.section_size = section_size
        self.rank = rank
        self.coords = coords  # tuple of M tuples, each of length rank
        self.block_size = block_size
        self.precision = precision
        self.sequence = sequence

    def gamma(self, n, m):
        """Scalar Hankel entry (n, m) from the source sequence."""
        from .moments import hankel_entry

        return hankel_entry(self.sequence, n, m)

    def __repr__(self):
        return (
            f"GramModel(M={self.section_size}, rank={self.rank}, "
            f"N={self.block_size}, precision={self.precision})"
        )


def embed(seq: MomentSequence, section_size: int, rank_tol=None,
          reverse_basis: bool = False) -> GramModel:
    """Realize the leading M x M scalar Hankel section as a Gram matrix.

    Parameters
    ----------
    seq : MomentSequence
        Source moments; assumed to have passed the solvability gate.
    section_size : int
        Number of scalar generators M.
    rank_tol : float, optional
        Relative eigenvalue cut on the equilibrated section; defaults to
        2^(-precision/2).
    reverse_basis : bool
        Reverse the eigen-coordinate ordering.  All model quantities are
        invariant under this unitary relabeling; the flag exists to
        exercise that invariance.
    """
    with mp.workprec(seq.precision):
        gram = gamma_section(seq, section_size)
        m = section_size
        tol = mp.mpf(2) ** (-seq.precision / 2) if rank_tol is None else mp.mpf(rank_tol)

        # Diagonal equilibration; a zero diagonal forces a zero row by
        # positive semidefiniteness, so its scale can stay 1.
        scales = []
        for n in range(m):
            d = mp.re(gram[n, n])
            if d < 0 and abs(d) > tol * max(abs(d), mp.mpf(1)):
                raise IndefiniteSectionError(f"negative diagonal Gamma_{n},{n} = {mp.nstr(d, 8)}")
            scales.append(mp.sqrt(d) if d > 0 else mp.mpf(1))
        scaled = mp.matrix(m, m)
        for n in range(m):
            for k in range(m):
                scaled[n, k] = gram[n, k] / (scales[n] * scales[k])

        evals, q = eigh_mp(scaled)
        lam_max = max(evals[-1], mp.mpf(0))
        if evals[0] < -tol * max(lam_max, mp.mpf(1)):
            raise IndefiniteSectionError(
                f"section eigenvalue {mp.nstr(evals[0], 8)} beyond the PSD tolerance"
            )
        cut = tol * lam_max
        kept = [i for i in range(m) if evals[i] > cut]
        if reverse_basis:
            kept = kept[::-1]
        rank = len(kept)

        root = [mp.sqrt(evals[i]) for i in kept]
        coords = []
        for n in range(m):
            coords.append(
                tuple(q[n, i] * root[pos] * scales[n] for pos, i in enumerate(kept))
            )
    return GramModel(
        section_size=m,
        rank=rank,
        coords=tuple(coords),
        block_size=seq.block_size,
        precision=seq.precision,
        sequence=seq,
    )


def x_vector(model: GramModel, n: int) -> ModelVector:
    """Coordinates of the generator x_n."""
    if model.rank == 0:
        raise EmptyModelError("model realizes the zero space (all moments vanish)")
    if not 0 <= n < model.section_size:
        raise IndexOutOfRangeError(f"x_{n} outside section of size {model.section_size}")
    return ModelVector(coefficients=model.coords[n], tag=f"x{n}")


def y_vector(model: GramModel, k: int, sign: str) -> ModelVector:
    """Shifted combination y_k^{sign} = x_{k+N} sign-apart i x_k, i.e.
    x_{k+N} - i x_k for '-' and x_{k+N} + i x_k for '+'."""
    if sign not in (SIGN_MINUS, SIGN_PLUS):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if model.rank == 0:
        raise EmptyModelError("model realizes the zero space (all moments vanish)")
    n_blk = model.block_size
    if k < 0 or k + n_blk >= model.section_size:
        raise IndexOutOfRangeError(
            f"y_{k} needs generator x_{k + n_blk}, section size is {model.section_size}"
        )
    with mp.workprec(model.precision):
        unit = mpc(0, 1) if sign == SIGN_PLUS else mpc(0, -1)
        coeffs = tuple(
            a + unit * b for a, b in zip(model.coords[k + n_blk], model.coords[k])
        )
    return ModelVector(coefficients=coeffs, tag=f"y{k}{sign}")


def y_coords(model: GramModel, sign: str):
    """All feasible y_k^{sign} coordinate tuples, k = 0..M-N-1."""
    n_blk = model.block_size
    count = model.section_size - n_blk
    return [y_vector(model, k, sign).coefficients for k in range(max(count, 0))]
