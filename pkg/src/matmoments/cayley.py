"""Orthonormal bases for the shifted subspaces, defect estimates,
determinacy classification, and the determinate (finite-rank) solution.

Gram-Schmidt over the family y_k^- = x_{k+N} - i x_k produces the
orthonormal u_k together with the lower-triangular coefficient table xi;
the isometric correspondence v_k = sum_j xi[k][j] y_j^+ transports the
same table to the plus side.  Orthogonalizing x_0..x_{N-1} against each
family yields the defect bases u', v' whose sizes estimate the deficiency
numbers.  Parseval residuals of x_n against either family decide
determinacy: they vanish exactly when x_n lies in the closed shifted
range, and the classification tracks them across doubled section sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from mpmath import mp, mpc

from .embedding import GramModel, embed, y_coords
from .errors import EmptyModelError, IndexOutOfRangeError, NotFiniteRankError
from .moments import MomentSequence, hankel_entry
from .mputil import eigh_mp, gram_schmidt

DETERMINATE = "determinate"
INDETERMINATE = "indeterminate"
INCONCLUSIVE = "inconclusive"

SIDE_A = "a"
SIDE_B = "b"


@dataclass
class CayleyBasis:
    """Orthonormal families spanning the finite section.

    u spans the minus-shifted range, v = (Cayley transform) u spans the
    plus-shifted range, u'/v' span the respective orthogonal complements
    within the section, and rho counts the u_k originating from the first
    N shifted generators.
    """

    tau: int
    u: list
    xi: list
    v: list
    u_prime: list
    v_prime: list
    rho: int
    rank: int
    section_size: int
    block_size: int
    precision: int

    @property
    def defect_minus(self):
        """Estimated deficiency dim(H - H^-), written delta-hat."""
        return len(self.u_prime)

    @property
    def defect_plus(self):
        """Estimated deficiency dim(H - H^+), written omega-hat."""
        return len(self.v_prime)


def orthogonalize(model: GramModel, deflate_tol=None) -> CayleyBasis:
    """Build the Cayley basis data from a Gram model.

    Gram-Schmidt runs twice over each vector (reorthogonalization) and
    deflates an element when its residual drops below ``deflate_tol``
    times its original norm; the default tolerance is 2^(-precision/3).
    """
    if model.rank == 0:
        raise EmptyModelError("model realizes the zero space")
    n_blk = model.block_size
    with mp.workprec(model.precision):
        tol = (
            mp.mpf(2) ** (-model.precision / 3)
            if deflate_tol is None
            else mp.mpf(deflate_tol)
        )
        y_minus = y_coords(model, "-")
        y_plus = y_coords(model, "+")

        ortho = gram_schmidt(y_minus, tol)
        u, xi, kept = ortho.basis, ortho.rows, ortho.kept
        rho = sum(1 for idx in kept if idx < n_blk)

        v = []
        for row in xi:
            acc = [mpc(0)] * model.rank
            for j, coef in enumerate(row):
                if coef == 0:
                    continue
                yj = y_plus[j]
                for p in range(model.rank):
                    acc[p] += coef * yj[p]
            v.append(acc)

        xs = [list(model.coords[n]) for n in range(min(n_blk, model.section_size))]
        u_prime = gram_schmidt(xs, tol, against=u, track_rows=False).basis
        v_prime = gram_schmidt(xs, tol, against=v, track_rows=False).basis

    return CayleyBasis(
        tau=len(u),
        u=u,
        xi=xi,
        v=v,
        u_prime=u_prime,
        v_prime=v_prime,
        rho=rho,
        rank=model.rank,
        section_size=model.section_size,
        block_size=n_blk,
        precision=model.precision,
    )


def determinacy_residual(basis: CayleyBasis, model: GramModel, side: str, n: int):
    """Parseval residual Gamma_{n,n} - sum_k |(x_n, basis_k)|^2.

    The inner products are evaluated through the coefficient table and
    raw Hankel entries (not through stored coordinates): for side 'a'
    (x_n, u_k) = sum_j conj(xi[k][j]) * (Gamma_{n,j+N} + i Gamma_{n,j}),
    and side 'b' replaces +i by -i (the plus-shifted family).
    """
    if side not in (SIDE_A, SIDE_B):
        raise ValueError(f"side must be 'a' or 'b', got {side!r}")
    if not 0 <= n < basis.block_size:
        raise IndexOutOfRangeError(f"residual index {n} outside 0..{basis.block_size - 1}")
    seq = model.sequence
    n_blk = basis.block_size
    with mp.workprec(basis.precision):
        unit = mpc(0, 1) if side == SIDE_A else mpc(0, -1)
        total = mp.re(hankel_entry(seq, n, n))
        for row in basis.xi:
            p = mpc(0)
            for j, coef in enumerate(row):
                if coef == 0:
                    continue
                w = hankel_entry(seq, n, j + n_blk) + unit * hankel_entry(seq, n, j)
                p += mp.conj(coef) * w
            total -= abs(p) ** 2
        return total


@dataclass
class SectionPolicy:
    """How determinacy classification walks the section sizes.

    Sections double from ``initial_section`` up to ``max_section``
    (capped by moment availability).  ``threshold`` is the relative
    Parseval-residual threshold theta; None selects
    max(1e-6, 2^(-precision/4)).  ``stability_window`` is the relative
    change under which a residual counts as stabilized across a
    doubling.
    """

    initial_section: int = 8
    max_section: int = 64
    threshold: Optional[float] = None
    stability_window: float = 0.25
    rank_tol: Optional[float] = None
    deflate_tol: Optional[float] = None


@dataclass
class DeterminacyVerdict:
    verdict: str
    side_a_residuals: list = field(default_factory=list)
    side_b_residuals: list = field(default_factory=list)
    residual_history: dict = field(default_factory=dict)
    threshold: float = 0.0
    sections: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    defect_history: list = field(default_factory=list)
    zero_branch: bool = False
    notes: list = field(default_factory=list)

    @property
    def is_determinate(self):
        return self.verdict == DETERMINATE

    def to_json_dict(self):
        return {
            "schema_version": 1,
            "verdict": self.verdict,
            "side_a_residuals": self.side_a_residuals,
            "side_b_residuals": self.side_b_residuals,
            "residual_history": self.residual_history,
            "threshold": self.threshold,
            "sections": self.sections,
            "ranks": self.ranks,
            "defect_history": self.defect_history,
            "zero_branch": self.zero_branch,
            "notes": self.notes,
        }


@lru_cache(maxsize=12)
def section_basis(seq: MomentSequence, section_size: int, rank_tol=None,
                  deflate_tol=None, reverse_basis: bool = False):
    """Cached (GramModel, CayleyBasis) pair for one section size."""
    model = embed(seq, section_size, rank_tol=rank_tol, reverse_basis=reverse_basis)
    basis = orthogonalize(model, deflate_tol=deflate_tol)
    return model, basis


def _floor_pow2(n):
    p = 1
    while 2 * p <= n:
        p *= 2
    return p


def _plan_sections(seq, policy):
    feasible = seq.max_section_size
    smallest = max(2, seq.block_size + 1)
    start = min(policy.initial_section, _floor_pow2(feasible)) if feasible >= 1 else 0
    if start < smallest:
        start = smallest
    sections = []
    m = start
    while m <= min(policy.max_section, feasible):
        sections.append(m)
        m *= 2
    while len(sections) < 2 and sections and sections[0] // 2 >= smallest:
        sections.insert(0, sections[0] // 2)
    return sections


def classify_determinacy(seq: MomentSequence, policy: Optional[SectionPolicy] = None,
                         reverse_basis: bool = False) -> DeterminacyVerdict:
    """Decide determinate / indeterminate / inconclusive from residuals.

    The all-zero sequence is determinate outright (unique zero solution).
    Otherwise sections run per policy; a side that holds every relative
    residual below theta across the last doubling certifies determinacy,
    while residuals that stabilize above theta on both sides, together
    with stable defect estimates, certify indeterminacy.  Anything else
    is reported inconclusive with guidance.
    """
    policy = policy or SectionPolicy()
    if seq.is_zero():
        return DeterminacyVerdict(
            verdict=DETERMINATE,
            zero_branch=True,
            threshold=_threshold(seq, policy),
            notes=["all moments vanish; the unique solution is the zero measure"],
        )
    sections = _plan_sections(seq, policy)
    if len(sections) < 2:
        return DeterminacyVerdict(
            verdict=INCONCLUSIVE,
            threshold=_threshold(seq, policy),
            sections=sections,
            notes=["not enough moments for two section sizes; supply more moments"],
        )

    theta = _threshold(seq, policy)
    hist_a, hist_b, rel_a, rel_b = [], [], [], []
    ranks, defects = [], []
    n_blk = seq.block_size
    with mp.workprec(seq.precision):
        diag = [mp.re(hankel_entry(seq, n, n)) for n in range(n_blk)]
    for m in sections:
        model, basis = section_basis(
            seq, m, rank_tol=policy.rank_tol, deflate_tol=policy.deflate_tol,
            reverse_basis=reverse_basis,
        )
        res_a = [determinacy_residual(basis, model, SIDE_A, n) for n in range(n_blk)]
        res_b = [determinacy_residual(basis, model, SIDE_B, n) for n in range(n_blk)]
        hist_a.append([float(x) for x in res_a])
        hist_b.append([float(x) for x in res_b])
        rel_a.append(max(_relative(res_a, diag)))
        rel_b.append(max(_relative(res_b, diag)))
        ranks.append(model.rank)
        defects.append((basis.defect_minus, basis.defect_plus))

    verdict = _decide(rel_a, rel_b, defects, theta, policy.stability_window)
    notes = []
    if verdict == INCONCLUSIVE:
        notes.append(
            "residuals neither fell below the threshold nor stabilized; "
            "raise the precision or the maximum section size"
        )
    return DeterminacyVerdict(
        verdict=verdict,
        side_a_residuals=hist_a[-1],
        side_b_residuals=hist_b[-1],
        residual_history={SIDE_A: hist_a, SIDE_B: hist_b},
        threshold=theta,
        sections=sections,
        ranks=ranks,
        defect_history=defects,
        notes=notes,
    )


def _threshold(seq, policy):
    if policy.threshold is not None:
        return float(policy.threshold)
    return max(1e-6, 2.0 ** (-seq.precision / 4))


def _relative(residuals, diag):
    out = []
    for res, d in zip(residuals, diag):
        if d <= 0:
            out.append(0.0)
        else:
            out.append(max(float(res / d), 0.0))
    return out


def _decide(rel_a, rel_b, defects, theta, window):
    for rel in (rel_a, rel_b):
        last, prev = rel[-1], rel[-2]
        if last <= theta and (prev <= theta or last <= 0.5 * prev):
            return DETERMINATE
    stable_sides = 0
    for rel in (rel_a, rel_b):
        last, prev = rel[-1], rel[-2]
        if last > theta and prev > theta and abs(last - prev) <= window * max(last, 1e-300):
            stable_sides += 1
    defects_stable = (
        defects[-1] == defects[-2]
        and defects[-1][0] >= 1
        and defects[-1][1] >= 1
    )
    if stable_sides == 2 and defects_stable:
        return INDETERMINATE
    return INCONCLUSIVE


def unique_solution_atoms(model: GramModel, basis: CayleyBasis,
                          atom_tol: float = 1e-7, moment_tol: float = 1e-8):
    """Spectral recovery of the unique solution in the finite-rank case.

    Represents the shift on the model coordinates, diagonalizes its
    Hermitian matrix, and assembles one PSD weight per eigenvalue
    cluster.  The result must reproduce the input moments within
    ``moment_tol`` (relative); failure signals that the finite-rank
    premise was wrong.
    """
    from .reference import AtomicMatrixMeasure

    if basis.defect_minus >= 1 and basis.defect_plus >= 1:
        raise ValueError(
            "unique-solution recovery requires a determinate section "
            "(a vanishing defect estimate)"
        )
    seq = model.sequence
    n_blk = model.block_size
    r = model.rank
    if r == 0:
        return AtomicMatrixMeasure(atoms=(), weights=(), block_size=n_blk)
    head_count = model.section_size - n_blk
    if head_count < r:
        raise NotFiniteRankError(
            f"section of size {model.section_size} cannot express the shift on rank {r}"
        )
    with mp.workprec(model.precision):
        head = [model.coords[k] for k in range(head_count)]
        tail = [model.coords[k + n_blk] for k in range(head_count)]
        h0 = mp.matrix(r, r)
        h1 = mp.matrix(r, r)
        for p in range(r):
            for q in range(r):
                h0[p, q] = mp.fsum(c[p] * mp.conj(c[q]) for c in head)
                h1[p, q] = mp.fsum(t[p] * mp.conj(c[q]) for t, c in zip(tail, head))
        evals0, q0 = eigh_mp(h0)
        lam_max = evals0[-1]
        tol0 = mp.mpf(2) ** (-model.precision / 2)
        if lam_max <= 0 or evals0[0] <= tol0 * lam_max:
            raise NotFiniteRankError(
                "leading generators do not span the model; "
                "grow the section or treat the problem as not finite rank"
            )
        # shift matrix B = H1 H0^{-1} through the eigendecomposition of H0
        t1 = h1 * q0
        for col in range(r):
            for row in range(r):
                t1[row, col] /= evals0[col]
        shift = t1 * q0.transpose_conj()
        herm = (shift + shift.transpose_conj()) / 2
        evals, qh = eigh_mp(herm)

        scale = max(abs(evals[0]), abs(evals[-1]), mp.mpf(1))
        merge = mp.mpf(atom_tol) * scale
        clusters = []
        for s, lam in enumerate(evals):
            if clusters and lam - clusters[-1][-1][1] <= merge:
                clusters[-1].append((s, lam))
            else:
                clusters.append([(s, lam)])

        atoms, weights = [], []
        total_trace = mp.mpf(0)
        for group in clusters:
            w = [[mpc(0) for _ in range(n_blk)] for _ in range(n_blk)]
            lam_mean = mp.fsum(lam for _, lam in group) / len(group)
            for s, _ in group:
                # a_i = w_s^H c_i, weight entry (k, j) = a_k conj(a_j)
                avals = [
                    mp.fsum(model.coords[i][p] * mp.conj(qh[p, s]) for p in range(r))
                    for i in range(n_blk)
                ]
                for k in range(n_blk):
                    for j in range(n_blk):
                        w[k][j] += avals[k] * mp.conj(avals[j])
            tr = mp.re(mp.fsum(w[k][k] for k in range(n_blk)))
            total_trace += tr
            atoms.append(lam_mean)
            weights.append(w)

        floor = mp.mpf(1e-12) * max(total_trace, mp.mpf(1))
        pruned = [
            (a, w)
            for a, w in zip(atoms, weights)
            if mp.re(mp.fsum(w[k][k] for k in range(n_blk))) > floor
        ]
        if not pruned:
            raise NotFiniteRankError("no atoms carry weight; model inconsistent")
        atoms = tuple(a for a, _ in pruned)
        weights = tuple(tuple(tuple(row) for row in w) for _, w in pruned)

        # The recovered measure must regenerate the input moments.
        worst = mp.mpf(0)
        for n in range(seq.count):
            for j in range(n_blk):
                for k in range(n_blk):
                    val = mp.fsum(
                        (a ** n if n else mp.mpf(1)) * w[j][k]
                        for a, w in zip(atoms, weights)
                    )
                    err = abs(val - seq.entry(n, j, k))
                    ref = max(abs(seq.entry(n, j, k)), mp.mpf(1))
                    worst = max(worst, err / ref)
        if worst > moment_tol:
            raise NotFiniteRankError(
                f"recovered measure misses the moments by {mp.nstr(worst, 5)}; "
                "the problem is not finite rank at this section"
            )
    return AtomicMatrixMeasure(atoms=atoms, weights=weights, block_size=n_blk)
