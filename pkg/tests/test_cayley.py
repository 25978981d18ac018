import numpy as np
import pytest
from mpmath import mp

from matmoments.cayley import (
    SectionPolicy,
    classify_determinacy,
    determinacy_residual,
    orthogonalize,
    section_basis,
    unique_solution_atoms,
)
from matmoments.embedding import embed, y_coords
from matmoments.errors import EmptyModelError, NotFiniteRankError
from matmoments.moments import MomentSequence, hankel_entry
from matmoments.mputil import inner, norm
from matmoments.reference import atomic_moments

from conftest import random_atomic_measure


def numpy_defects(seq, size):
    """Brute-force defect estimates with plain numpy, independent of the
    multiprecision pipeline (valid at desk scale only)."""
    gram = np.array(
        [
            [complex(hankel_entry(seq, i, j)) for j in range(size)]
            for i in range(size)
        ]
    )
    evals, vecs = np.linalg.eigh(gram)
    keep = evals > 1e-10 * evals.max()
    coords = vecs[:, keep] * np.sqrt(evals[keep])  # rows = generator coordinates
    n_blk = seq.block_size
    y = np.array([coords[k + n_blk] - 1j * coords[k] for k in range(size - n_blk)])
    rank_y = np.linalg.matrix_rank(y, tol=1e-8) if len(y) else 0
    span = np.linalg.matrix_rank(gram, tol=1e-10 * max(evals.max(), 1))
    return span - rank_y  # defect estimate (either side; they agree here)


def test_two_atom_basis(two_atom_seq):
    model = embed(two_atom_seq, 4)
    basis = orthogonalize(model)
    assert basis.tau == 2
    assert basis.defect_minus == 0
    assert basis.defect_plus == 0
    assert basis.rho == 1
    assert numpy_defects(two_atom_seq, 4) == 0


def test_orthonormality_and_xi(two_atom_seq):
    model = embed(two_atom_seq, 6)
    basis = orthogonalize(model)
    with mp.workprec(model.precision):
        for a in range(basis.tau):
            for b in range(basis.tau):
                val = inner(basis.u[a], basis.u[b])
                assert abs(val - (1 if a == b else 0)) < 1e-13
        # xi rows reproduce u_k from the y family
        ys = y_coords(model, "-")
        for k, row in enumerate(basis.xi):
            recon = [mp.mpc(0)] * model.rank
            for j, c in enumerate(row):
                for p in range(model.rank):
                    recon[p] += c * ys[j][p]
            err = norm([r - u for r, u in zip(recon, basis.u[k])])
            assert err < 1e-13


def test_isometry_transport(two_atom_seq, lognormal_section_32):
    # ||v_k|| = 1 for every retained k (the transform is isometric)
    model = embed(two_atom_seq, 6)
    basis = orthogonalize(model)
    for vk in basis.v:
        assert abs(norm(vk) - 1) < 1e-12
    basis_log = lognormal_section_32.basis
    with mp.workprec(basis_log.precision):
        for vk in basis_log.v:
            assert abs(norm(vk) - 1) < mp.mpf(2) ** (-200)


def test_completeness(two_atom_seq, lognormal_section_32):
    model = embed(two_atom_seq, 6)
    basis = orthogonalize(model)
    assert basis.tau + basis.defect_minus == model.rank
    assert basis.tau + basis.defect_plus == model.rank
    b = lognormal_section_32.basis
    assert b.tau + b.defect_minus == lognormal_section_32.model.rank
    assert b.tau + b.defect_plus == lognormal_section_32.model.rank


def test_lognormal_defects(lognormal_section_32):
    basis = lognormal_section_32.basis
    assert basis.defect_minus == 1
    assert basis.defect_plus == 1
    assert basis.rho == 1
    with mp.workprec(basis.precision):
        tol = mp.mpf(2) ** (-200)
        assert all(abs(inner(basis.u_prime[0], uk)) < tol for uk in basis.u)
        assert all(abs(inner(basis.v_prime[0], vk)) < tol for vk in basis.v)
        assert abs(norm(basis.u_prime[0]) - 1) < tol
        assert abs(norm(basis.v_prime[0]) - 1) < tol


def test_blockdiag_defects(blockdiag_section):
    basis = blockdiag_section.basis
    assert basis.defect_minus == 1  # indeterminate, but below N=2
    assert basis.defect_plus == 1
    assert basis.rho == 2


def test_empty_model_rejected(zero_seq):
    model = embed(zero_seq, 3)
    with pytest.raises(EmptyModelError):
        orthogonalize(model)


def test_residual_two_atom_parseval(two_atom_seq):
    model = embed(two_atom_seq, 4)
    basis = orthogonalize(model)
    for side in ("a", "b"):
        res = determinacy_residual(basis, model, side, 0)
        assert abs(res) < 1e-10


def test_residual_matches_coordinate_path(lognormal_section_32):
    # xi-table evaluation agrees with direct coordinate inner products
    model, basis = lognormal_section_32.model, lognormal_section_32.basis
    res = determinacy_residual(basis, model, "a", 0)
    with mp.workprec(model.precision):
        x0 = model.coords[0]
        direct = mp.re(inner(x0, x0)) - mp.fsum(
            abs(inner(x0, uk)) ** 2 for uk in basis.u
        )
        assert abs(res - direct) < mp.mpf(2) ** (-150)


def test_residual_lognormal_monotone_stabilizing(lognormal_seq):
    values = []
    for m in (16, 32, 64):
        model, basis = section_basis(lognormal_seq, m)
        values.append(float(determinacy_residual(basis, model, "a", 0)))
    assert values[0] >= values[1] >= values[2] > 0
    assert abs(values[1] - values[2]) / values[2] < 1e-6
    # regression anchor from the recorded high-precision run
    assert values[2] == pytest.approx(0.408121241377567, abs=1e-9)


def test_residual_bessel_bound(lognormal_section_64):
    model, basis = lognormal_section_64.model, lognormal_section_64.basis
    for side in ("a", "b"):
        res = determinacy_residual(basis, model, side, 0)
        assert res > -1e-20  # Bessel: partial sums never exceed the norm


def test_classify_two_atom(two_atom_seq):
    verdict = classify_determinacy(two_atom_seq, SectionPolicy(initial_section=8, max_section=16))
    assert verdict.verdict == "determinate"
    assert max(abs(r) for r in verdict.side_a_residuals) < 1e-10


def test_classify_zero(zero_seq):
    verdict = classify_determinacy(zero_seq)
    assert verdict.verdict == "determinate"
    assert verdict.zero_branch


def test_classify_lognormal(lognormal_seq):
    verdict = classify_determinacy(
        lognormal_seq, SectionPolicy(initial_section=16, max_section=64)
    )
    assert verdict.verdict == "indeterminate"
    assert verdict.defect_history[-1] == (1, 1)


def test_classify_gaussian_inconclusive_small_sections(gaussian_seq):
    # at 53 bits the residual decays too slowly to certify by M=16
    verdict = classify_determinacy(
        gaussian_seq, SectionPolicy(initial_section=8, max_section=16)
    )
    assert verdict.verdict == "inconclusive"
    assert verdict.notes


def test_classify_gaussian_resolves_at_larger_sections(gaussian_seq):
    # by M=32 the rank cut saturates the section and the (true)
    # determinate verdict emerges
    verdict = classify_determinacy(
        gaussian_seq, SectionPolicy(initial_section=16, max_section=64)
    )
    assert verdict.verdict == "determinate"


def test_classify_invariant_under_embedding(lognormal_seq):
    policy = SectionPolicy(initial_section=16, max_section=32)
    plain = classify_determinacy(lognormal_seq, policy)
    flipped = classify_determinacy(lognormal_seq, policy, reverse_basis=True)
    assert plain.verdict == flipped.verdict
    for a, b in zip(plain.side_a_residuals, flipped.side_a_residuals):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_unique_solution_two_atom(two_atom_seq):
    model, basis = section_basis(two_atom_seq, 6)
    measure = unique_solution_atoms(model, basis)
    atoms = [float(a) for a in measure.atoms]
    assert atoms == pytest.approx([-1.0, 1.0], abs=1e-10)
    for w in measure.weights:
        assert complex(w[0][0]) == pytest.approx(0.5, abs=1e-10)


def test_unique_solution_point_mass(point_mass_seq):
    model, basis = section_basis(point_mass_seq, 3)
    measure = unique_solution_atoms(model, basis)
    assert [float(a) for a in measure.atoms] == pytest.approx([0.0], abs=1e-12)
    assert complex(measure.weights[0][0][0]) == pytest.approx(1.0, abs=1e-12)


def test_unique_solution_block_diag():
    blocks = [
        [[2.0 ** n, 0.0], [0.0, 1.0 if n == 0 else 0.0]] for n in range(13)
    ]
    seq = MomentSequence(blocks, block_size=2)
    model, basis = section_basis(seq, 6)
    measure = unique_solution_atoms(model, basis)
    assert [float(a) for a in measure.atoms] == pytest.approx([0.0, 2.0], abs=1e-9)
    w0, w2 = measure.weight_arrays()
    assert np.allclose(w0, np.diag([0.0, 1.0]), atol=1e-9)
    assert np.allclose(w2, np.diag([1.0, 0.0]), atol=1e-9)


def test_unique_solution_roundtrip_random():
    rng = np.random.default_rng(11)
    for _ in range(4):
        n_blk = int(rng.integers(1, 4))
        measure = random_atomic_measure(rng, n_blk, max_atoms=4)
        seq = atomic_moments(measure, 25 // n_blk * n_blk + 3)
        size = 2 * len(measure.atoms) * n_blk
        size = min(size, seq.max_section_size)
        model, basis = section_basis(seq, size)
        recovered = unique_solution_atoms(model, basis)
        # Hausdorff distance on atoms carrying weight
        got = np.array([float(a) for a in recovered.atoms])
        want = np.array([float(a) for a in measure.atoms])
        kept_want = [
            (a, w) for a, w in zip(want, measure.weight_arrays())
            if np.trace(w).real > 1e-12
        ]
        assert len(got) == len(kept_want)
        for (a, w), g, wg in zip(kept_want, got, recovered.weight_arrays()):
            assert abs(a - g) < 1e-6
            assert np.linalg.norm(w - wg, 2) < 1e-6


def test_unique_solution_rejects_indeterminate(lognormal_section_32):
    with pytest.raises(ValueError):
        unique_solution_atoms(lognormal_section_32.model, lognormal_section_32.basis)


def test_unique_solution_needs_spanning_head(two_atom_seq):
    # section too small for the shift to be expressible on the full rank
    model, basis = section_basis(two_atom_seq, 2)
    with pytest.raises((NotFiniteRankError, ValueError)):
        unique_solution_atoms(model, basis)
