"""Independent brute-force references for certifying the main pipeline.

Everything here works directly with measures: moment generation by plain
sums or adaptive quadrature, Stieltjes transforms by direct evaluation,
and a classical indeterminacy witness (two distinct densities sharing
all moments).  None of it reuses the pipeline's orthogonalization or
factorization code, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from mpmath import mp, mpc, mpf

from .errors import PoleOnSupportError, QuadratureNonconvergentError
from .moments import MomentSequence


@dataclass
class AtomicMatrixMeasure:
    """Pure point matrix measure: PSD weight matrices at real atoms."""

    atoms: tuple
    weights: tuple
    block_size: int = 1

    def __post_init__(self):
        atoms = tuple(self.atoms)
        weights = tuple(
            tuple(tuple(mpc(x) for x in row) for row in _rows(w, self.block_size))
            for w in self.weights
        )
        if len(atoms) != len(weights):
            raise ValueError("one weight matrix per atom required")
        for a, b in zip(atoms, atoms[1:]):
            if not a < b:
                raise ValueError("atoms must be strictly increasing")
        for w in weights:
            arr = np.array([[complex(x) for x in row] for row in w])
            if arr.size and np.linalg.eigvalsh((arr + arr.conj().T) / 2).min() < -1e-10 * max(
                1.0, abs(arr).max()
            ):
                raise ValueError("weights must be positive semidefinite")
        self.atoms = atoms
        self.weights = weights

    def weight_arrays(self):
        return [
            np.array([[complex(x) for x in row] for row in w]) for w in self.weights
        ]


def _rows(w, n):
    if hasattr(w, "rows"):
        return [[w[i, j] for j in range(w.cols)] for i in range(w.rows)]
    if isinstance(w, (int, float, complex)) or hasattr(w, "_mpf_") or hasattr(w, "_mpc_"):
        if n != 1:
            raise ValueError("scalar weight only valid for block size 1")
        return [[w]]
    return [list(row) for row in w]


@dataclass
class DensityMeasure:
    """Absolutely continuous measure given by an entrywise density.

    ``density`` maps a real point to a scalar (block size 1) or an NxN
    Hermitian PSD matrix.  ``log_substitute`` integrates through
    x = exp(u), which stabilizes quadrature for densities supported on
    (0, inf) with fast-growing moments.
    """

    density: Callable
    support: tuple
    block_size: int = 1
    log_substitute: bool = False
    name: str = ""


def two_atom_measure() -> AtomicMatrixMeasure:
    """Atoms at -1 and +1 with weight 1/2 each (scalar)."""
    return AtomicMatrixMeasure(atoms=(-1.0, 1.0), weights=(0.5, 0.5), block_size=1)


def point_mass(position=0.0, block_size=1, weight=None) -> AtomicMatrixMeasure:
    if weight is None:
        weight = [[1.0 if i == j else 0.0 for j in range(block_size)] for i in range(block_size)]
    return AtomicMatrixMeasure(atoms=(position,), weights=(weight,), block_size=block_size)


def gaussian_density() -> DensityMeasure:
    return DensityMeasure(
        density=lambda x: mp.exp(-x * x / 2) / mp.sqrt(2 * mp.pi),
        support=(mp.ninf, mp.inf),
        name="gaussian",
    )


def lognormal_density(perturbation: float = 0.0) -> DensityMeasure:
    """Standard lognormal density, optionally perturbed by the classical
    moment-preserving factor 1 + eps*sin(2 pi ln x)."""
    eps = mpf(perturbation)

    def dens(x):
        base = mp.exp(-mp.log(x) ** 2 / 2) / (x * mp.sqrt(2 * mp.pi))
        if eps == 0:
            return base
        return base * (1 + eps * mp.sin(2 * mp.pi * mp.log(x)))

    label = "lognormal" if eps == 0 else f"lognormal*| (1+{perturbation}*sin(2 pi ln x))"
    return DensityMeasure(density=dens, support=(mpf(0), mp.inf), log_substitute=True, name=label)


def lognormal_pair(eps: float):
    """Two distinct densities on (0, inf) sharing every power moment.

    For 0 < eps <= 1 the perturbed density stays non-negative and the
    sine factor integrates to zero against every x^n, so both members
    solve the same moment problem: a self-contained indeterminacy
    witness.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return lognormal_density(0.0), lognormal_density(eps)


def atomic_moments(measure: AtomicMatrixMeasure, count: int, precision: int = 53) -> MomentSequence:
    """Moments S_n = sum_s atom_s^n * weight_s, exact in working precision."""
    if count < 2:
        raise ValueError("need at least two moments")
    n_blk = measure.block_size
    with mp.workprec(precision):
        atoms = [mpf(a) if not hasattr(a, "_mpf_") else a for a in measure.atoms]
        blocks = []
        for n in range(count):
            rows = [
                [
                    mp.fsum(
                        (atoms[s] ** n) * measure.weights[s][j][k]
                        for s in range(len(atoms))
                    )
                    for k in range(n_blk)
                ]
                for j in range(n_blk)
            ]
            blocks.append(rows)
    return MomentSequence(blocks, block_size=n_blk, precision=precision)


def quadrature_moments(measure: DensityMeasure, count: int, precision: int = 53,
                       rel_tol=None) -> MomentSequence:
    """Moments of a density by adaptive quadrature.

    The relative error target defaults to 2^(-precision/2); quadrature
    that cannot certify it raises.
    """
    if count < 2:
        raise ValueError("need at least two moments")
    n_blk = measure.block_size
    with mp.workprec(precision + 20):
        tol = mp.mpf(2) ** (-precision / 2) if rel_tol is None else mp.mpf(rel_tol)
        blocks = []
        for n in range(count):
            # after x = exp(u) the weight x^n peaks near u = n; telling the
            # quadrature about it keeps the error estimate honest
            split = [n] if measure.log_substitute else None
            if n_blk == 1:
                val = _quad_scalar(measure, lambda x: x ** n, tol, split=split)
                blocks.append([[val]])
            else:
                rows = [
                    [
                        _quad_scalar(measure, lambda x: x ** n, tol,
                                     entry=(j, k), split=split)
                        for k in range(n_blk)
                    ]
                    for j in range(n_blk)
                ]
                blocks.append(rows)
    return MomentSequence(blocks, block_size=n_blk, precision=precision)


def _quad_scalar(measure, weight_fn, tol, entry=None, split=None):
    a, b = measure.support

    def pick(x):
        d = measure.density(x)
        if entry is None:
            return d
        return d[entry[0], entry[1]] if hasattr(d, "rows") else d[entry[0]][entry[1]]

    if measure.log_substitute:
        if not (a == 0 and b == mp.inf):
            raise ValueError("log substitution requires support (0, inf)")

        def integrand(u):
            x = mp.exp(u)
            return weight_fn(x) * pick(x) * x

        points = [mp.ninf] + list(split or []) + [mp.inf]
        val, err = mp.quad(integrand, points, error=True, maxdegree=8)
    else:
        points = [a] + list(split or []) + [b]
        val, err = mp.quad(lambda x: weight_fn(x) * pick(x), points, error=True,
                           maxdegree=8)
    if err > tol * max(1, abs(val)):
        raise QuadratureNonconvergentError(
            f"quadrature error {mp.nstr(err, 5)} above tolerance for {measure.name or 'density'}"
        )
    return val


def direct_transform(measure, z):
    """Stieltjes transform of an oracle measure at z, directly.

    Atomic measures sum weights[s] / (atoms[s] - z); densities integrate
    density(x)/(x - z).  Returns a complex NxN ndarray.
    """
    if isinstance(measure, AtomicMatrixMeasure):
        zc = complex(z)
        out = np.zeros((measure.block_size, measure.block_size), dtype=complex)
        for atom, w in zip(measure.atoms, measure.weight_arrays()):
            d = float(atom) - zc
            if abs(d) < 1e-12 * (1 + abs(float(atom))):
                raise PoleOnSupportError(f"z = {zc} collides with atom {atom}")
            out += w / d
        return out
    n_blk = measure.block_size
    zc = mpc(complex(z))
    if mp.im(zc) == 0:
        a, b = measure.support
        if (a == mp.ninf or mp.re(zc) >= a) and (b == mp.inf or mp.re(zc) <= b):
            raise PoleOnSupportError(f"real z = {z} lies on the support")
    with mp.workprec(80):
        out = np.empty((n_blk, n_blk), dtype=complex)
        for j in range(n_blk):
            for k in range(n_blk):
                entry = None if n_blk == 1 else (j, k)
                val = _quad_scalar(
                    measure,
                    lambda x: 1 / (x - zc),
                    mp.mpf(1e-12),
                    entry=entry,
                )
                out[j, k] = complex(float(mp.re(val)), float(mp.im(val)))
    return out


SUGGESTS_DETERMINATE = "suggests-determinate"
NO_INFORMATION = "no-information"


def carleman_hint(seq: MomentSequence) -> str:
    """Classical sufficient-divergence hint on the trace sequence.

    Divergence of sum_n (trace S_{2n})^(-1/(2n)) implies determinacy.
    Terms that do not decay geometrically point at divergence; a
    vanishing even trace means bounded (degenerate) support.  Advisory
    only; never overrides the residual machinery.
    """
    with mp.workprec(seq.precision):
        terms = []
        n = 1
        while 2 * n < seq.count:
            tr = mp.re(mp.fsum(seq.entry(2 * n, j, j) for j in range(seq.block_size)))
            if tr <= 0:
                return SUGGESTS_DETERMINATE
            terms.append(tr ** (mpf(-1) / (2 * n)))
            n += 1
        if len(terms) < 3:
            return NO_INFORMATION
        ratios = sorted(
            float(t2 / t1) for t1, t2 in zip(terms[len(terms) // 2:], terms[len(terms) // 2 + 1:])
        )
        median = ratios[len(ratios) // 2]
        return SUGGESTS_DETERMINATE if median >= 0.9 else NO_INFORMATION


def gaussian_moments(count: int, precision: int = 53) -> MomentSequence:
    """Standard Gaussian moments (2k-1)!! at even orders, zero at odd."""
    with mp.workprec(precision):
        vals = []
        for n in range(count):
            if n % 2:
                vals.append(mpf(0))
            else:
                vals.append(mp.fac2(n - 1) if n else mpf(1))
        return MomentSequence([[[v]] for v in vals], precision=precision)


def lognormal_moments(count: int, precision: int = 256) -> MomentSequence:
    """Closed-form lognormal moments exp(n^2 / 2)."""
    with mp.workprec(precision):
        vals = [mp.exp(mpf(n) ** 2 / 2) for n in range(count)]
        return MomentSequence([[[v]] for v in vals], precision=precision)


def block_diag_moments(count: int, precision: int = 256) -> MomentSequence:
    """N=2 sequence diag(lognormal, two-atom): indeterminate overall but
    with defect below the block size."""
    with mp.workprec(precision):
        blocks = []
        for n in range(count):
            log_part = mp.exp(mpf(n) ** 2 / 2)
            atom_part = mpf(1) if n % 2 == 0 else mpf(0)
            blocks.append([[log_part, mpf(0)], [mpf(0), atom_part]])
        return MomentSequence(blocks, block_size=2, precision=precision)


def zero_moments(count: int, block_size: int = 1, precision: int = 53) -> MomentSequence:
    zero = [[0.0 for _ in range(block_size)] for _ in range(block_size)]
    return MomentSequence([zero for _ in range(count)], block_size=block_size, precision=precision)
