"""Evaluation of the solution family, Herglotz validation, measure
recovery, and the finite-section convergence driver.

A Schur parameter F (contraction-valued on the upper half plane, shape
omega x delta) selects one solution; its Stieltjes transform at z is

    S(z) = transpose[ (a + b F(z) (I + c F(z))^{-1} d) / (z^2+1)^2 ]

with the coefficient matrices from ``coefficients``.  The transpose
resolves the transform's internal convention once, so callers always see
the plain Stieltjes transform of the solution measure.  Densities and
cumulatives come back through the boundary values of the imaginary
part, and the convergence driver doubles the section size until the
transform values are Cauchy on a reference grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .cayley import section_basis
from .coefficients import (
    EPS_POLE,
    NevanlinnaCoefficients,
    coefficients,
    structure_matrices,
)
from .errors import (
    ContractionViolationError,
    LftSingularError,
    NoConvergenceError,
)
from .moments import MomentSequence

EPS_HERGLOTZ = 1e-8
EPS_CONTRACT = 1e-8

ZERO = "zero"
CONSTANT = "constant"
MOEBIUS = "moebius"
EVALUATOR = "evaluator"


class SchurParameter:
    """A contraction-valued function on the upper half plane.

    Built-in kinds: the zero parameter (adapts to any shape), a constant
    matrix (validated once), and the Moebius family zeta(z) * C which is
    analytic and strictly contractive for ||C|| <= 1.  Arbitrary
    callables are accepted with per-call contraction validation;
    analyticity is the caller's obligation.
    """

    def __init__(self, kind, shape=None, matrix=None, fn=None,
                 eps_contract=EPS_CONTRACT):
        self.kind = kind
        self.shape = shape
        self.matrix = None if matrix is None else np.asarray(matrix, dtype=complex)
        self.fn = fn
        self.eps_contract = eps_contract
        if self.matrix is not None:
            _check_contraction(self.matrix, eps_contract, context=kind)
            self.shape = self.matrix.shape

    @classmethod
    def zero(cls, shape=None):
        return cls(ZERO, shape=shape)

    @classmethod
    def constant(cls, matrix, eps_contract=EPS_CONTRACT):
        return cls(CONSTANT, matrix=matrix, eps_contract=eps_contract)

    @classmethod
    def moebius(cls, matrix, eps_contract=EPS_CONTRACT):
        return cls(MOEBIUS, matrix=matrix, eps_contract=eps_contract)

    @classmethod
    def from_callable(cls, fn, shape, eps_contract=EPS_CONTRACT):
        return cls(EVALUATOR, shape=tuple(shape), fn=fn, eps_contract=eps_contract)

    def value(self, z, shape=None):
        """Evaluate at z; ``shape`` is the (omega, delta) the transform
        needs and must match unless the kind is the adaptive zero."""
        target = shape or self.shape
        if target is None:
            raise ValueError("schur parameter has no shape and none was supplied")
        if self.kind == ZERO:
            if self.shape is not None and shape is not None and tuple(self.shape) != tuple(shape):
                raise ValueError(f"schur shape {self.shape} does not match required {shape}")
            return np.zeros(target, dtype=complex)
        if self.shape is not None and shape is not None and tuple(self.shape) != tuple(shape):
            raise ValueError(f"schur shape {self.shape} does not match required {shape}")
        if self.kind == CONSTANT:
            return self.matrix
        if self.kind == MOEBIUS:
            zc = complex(z)
            return ((zc - 1j) / (zc + 1j)) * self.matrix
        val = np.asarray(self.fn(z), dtype=complex)
        if val.shape != tuple(target):
            raise ValueError(f"evaluator returned shape {val.shape}, needs {tuple(target)}")
        _check_contraction(val, self.eps_contract, context="evaluator")
        return val


def _check_contraction(mat, eps, context=""):
    if mat.size == 0:
        return
    top = np.linalg.norm(mat, 2)
    if top > 1 + eps:
        raise ContractionViolationError(
            f"schur parameter ({context}) has largest singular value {top:.3e} > 1"
        )


@dataclass
class TransformSample:
    """One evaluated transform value with its Herglotz diagnostic."""

    z: complex
    s: np.ndarray
    herglotz_min: float


def evaluate_transform(coeffs: NevanlinnaCoefficients, schur: SchurParameter,
                       eps_contract: float = EPS_CONTRACT) -> TransformSample:
    """Apply the linear fractional transformation at one point."""
    z = coeffs.z
    need = (coeffs.defect_plus, coeffs.defect_minus)
    f_val = schur.value(z, shape=need)
    _check_contraction(f_val, eps_contract, context=schur.kind)
    delta = coeffs.defect_minus
    lhs = np.eye(delta, dtype=complex) + coeffs.c @ f_val
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > 1e13:
        raise LftSingularError(
            f"I + C(z)F(z) is numerically singular at z = {z}", condition=cond
        )
    solved = np.linalg.solve(lhs, coeffs.d)
    g = (coeffs.a + coeffs.b @ f_val @ solved) / (z * z + 1) ** 2
    s = g.T.copy()
    herg = float(np.linalg.eigvalsh((s - s.conj().T) / 2j).min())
    return TransformSample(z=z, s=s, herglotz_min=herg)


@dataclass
class HerglotzReport:
    samples: list
    min_imag_eig: float
    eps: float

    @property
    def passed(self):
        return self.min_imag_eig >= -self.eps


def herglotz_report(samples, eps: float = EPS_HERGLOTZ) -> HerglotzReport:
    worst = min(s.herglotz_min for s in samples)
    return HerglotzReport(samples=list(samples), min_imag_eig=worst, eps=eps)


def herglotz_scan(coeffs_list, schur: SchurParameter,
                  eps: float = EPS_HERGLOTZ) -> HerglotzReport:
    """Evaluate over a grid of coefficient sets and report the minimum
    eigenvalue of the imaginary part; pass iff >= -eps."""
    samples = [evaluate_transform(c, schur) for c in coeffs_list]
    return herglotz_report(samples, eps)


@dataclass
class InversionResult:
    """Sampled matrix density and cumulative from boundary values."""

    grid: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray
    min_increment_eig: float

    def mass(self, lo: float, hi: float) -> np.ndarray:
        """Cumulative increment over [lo, hi] by nearest grid points."""
        i = int(np.searchsorted(self.grid, lo))
        j = int(np.searchsorted(self.grid, hi))
        i = min(max(i, 0), len(self.grid) - 1)
        j = min(max(j, 0), len(self.grid) - 1)
        return self.cumulative[j] - self.cumulative[i]


def stieltjes_invert(sampler: Callable, interval, step: float, offset: float,
                     ) -> InversionResult:
    """Recover density and cumulative on a real interval.

    density(x) ~ Im S(x + i*offset) / pi entrywise (as the Hermitian
    part); the cumulative integrates it by the trapezoid rule.  The
    minimum eigenvalue over all trapezoid increments is reported so
    callers can check monotonicity.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (offset > 0 and step > 0 and hi > lo):
        raise ValueError("need offset > 0, step > 0 and a nonempty interval")
    count = int(round((hi - lo) / step)) + 1
    grid = lo + step * np.arange(count)
    densities = []
    for x in grid:
        s = np.asarray(sampler(complex(x, offset)), dtype=complex)
        densities.append((s - s.conj().T) / (2j * np.pi))
    density = np.array(densities)
    n = density.shape[1]
    cumulative = np.zeros_like(density)
    min_inc = np.inf
    for idx in range(1, count):
        inc = (density[idx - 1] + density[idx]) * (step / 2)
        cumulative[idx] = cumulative[idx - 1] + inc
        if n:
            min_inc = min(min_inc, float(np.linalg.eigvalsh((inc + inc.conj().T) / 2).min()))
    return InversionResult(
        grid=grid, density=density, cumulative=cumulative,
        min_increment_eig=float(min_inc),
    )


@dataclass
class Section:
    """One finite section of the pipeline, ready for evaluation."""

    model: object
    basis: object
    matrices: object

    def coefficients_at(self, z, eps_pole: float = EPS_POLE) -> NevanlinnaCoefficients:
        return coefficients(self.matrices, self.model.sequence, z, eps_pole=eps_pole)

    def transform_at(self, z, schur: SchurParameter,
                     eps_pole: float = EPS_POLE) -> TransformSample:
        return evaluate_transform(self.coefficients_at(z, eps_pole=eps_pole), schur)


@lru_cache(maxsize=8)
def _cached_section(seq, size, rank_tol, deflate_tol, reverse_basis):
    model, basis = section_basis(
        seq, size, rank_tol=rank_tol, deflate_tol=deflate_tol,
        reverse_basis=reverse_basis,
    )
    return Section(model=model, basis=basis, matrices=structure_matrices(basis, model))


def build_section(seq: MomentSequence, size: int, rank_tol=None, deflate_tol=None,
                  reverse_basis: bool = False) -> Section:
    """Embed, orthogonalize, and tabulate one section (cached)."""
    return _cached_section(seq, size, rank_tol, deflate_tol, reverse_basis)


@dataclass
class ConvergencePolicy:
    initial_section: int = 16
    max_section: int = 128
    tol: float = 1e-6
    rank_tol: Optional[float] = None
    deflate_tol: Optional[float] = None


@dataclass
class ConvergenceResult:
    samples: dict
    sections: list
    gap_history: list
    achieved_gap: Optional[float]
    section: Section

    @property
    def final_section_size(self):
        return self.sections[-1]


def convergence_driver(seq: MomentSequence, grid, schur: Optional[SchurParameter] = None,
                       policy: Optional[ConvergencePolicy] = None,
                       reverse_basis: bool = False) -> ConvergenceResult:
    """Double the section size until transform values settle on the grid.

    Stops when max_z ||S_M(z) - S_{M/2}(z)|| <= tol; an infinite tol
    accepts the first section.  Exhausting the policy (or the supplied
    moments) without meeting the tolerance raises, with the gap history
    attached, rather than silently returning.
    """
    policy = policy or ConvergencePolicy()
    schur = schur or SchurParameter.zero()
    grid = [complex(z) for z in grid]
    feasible = seq.max_section_size
    size = min(policy.initial_section, feasible)
    sections, gaps = [], []
    prev = None
    while True:
        # a determinate section raises DeterminateInputError from the
        # structure-matrix construction inside build_section
        section = build_section(
            seq, size, rank_tol=policy.rank_tol, deflate_tol=policy.deflate_tol,
            reverse_basis=reverse_basis,
        )
        samples = {
            z: section.transform_at(z, schur).s for z in grid
        }
        sections.append(size)
        if policy.tol == np.inf:
            return ConvergenceResult(samples, sections, gaps, None, section)
        if prev is not None:
            gap = max(np.linalg.norm(samples[z] - prev[z], 2) for z in grid)
            gaps.append(gap)
            if gap <= policy.tol:
                return ConvergenceResult(samples, sections, gaps, gap, section)
        prev = samples
        next_size = size * 2
        if next_size > min(policy.max_section, feasible):
            raise NoConvergenceError(
                f"transform not Cauchy within tol {policy.tol} up to section {size} "
                f"(gaps: {[f'{g:.3e}' for g in gaps]})",
                gap_history=gaps,
                sections=sections,
            )
        size = next_size
