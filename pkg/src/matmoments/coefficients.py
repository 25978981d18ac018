"""Structure matrices and the coefficient matrices of the solution
transform.

The Cayley basis yields five inner-product tables that, together with
the first three moments, determine everything downstream:

    compression[j, k] = (v_k, u_j)      tau x tau, compressed isometry
    w_cross[j, l]     = (v'_l, u_j)     tau x omega
    t_cross[j, l]     = (v'_l, u'_j)    delta x omega
    c0_base[j, k]     = (v_k, u'_j)     delta x tau
    k_map[j, k]       = (y_k^-, u_j)    rho x N

All entries are O(1) (inner products against unit vectors), so they are
stored in complex128; the multiprecision work is confined upstream.
For a point z in the upper half plane with zeta = (z-i)/(z+i), the
resolvent section (I - zeta*compression)^{-1} and its leading rho-sized
blocks assemble the four coefficient matrices of the linear fractional
transformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from mpmath import mp

from .cayley import CayleyBasis
from .embedding import GramModel, y_coords
from .errors import (
    DeterminateInputError,
    ExcludedPointError,
    HalfPlaneError,
    InsufficientMomentsError,
)
from .moments import MomentSequence, hankel_entry
from .mputil import inner, mpc_to_complex

EPS_POLE = 1e-8


@dataclass
class StructureMatrices:
    compression: np.ndarray
    w_cross: np.ndarray
    t_cross: np.ndarray
    c0_base: np.ndarray
    k_map: np.ndarray
    rho: int
    tau: int
    defect_minus: int
    defect_plus: int
    block_size: int
    section_size: int
    precision: int


@dataclass
class NevanlinnaCoefficients:
    """The four coefficient matrices evaluated at one point.

    Shapes: a is NxN, b is N x omega, c is delta x omega, d is delta x N,
    where (omega, delta) are the defect estimates of the producing
    section.  b composes with Schur parameters of shape omega x delta.
    """

    z: complex
    zeta: complex
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    section_size: int
    tau: int

    @property
    def block_size(self):
        return self.a.shape[0]

    @property
    def defect_minus(self):
        return self.d.shape[0]

    @property
    def defect_plus(self):
        return self.b.shape[1]


def structure_matrices(basis: CayleyBasis, model: GramModel) -> StructureMatrices:
    """Inner-product tables of the Cayley basis, downcast to complex128."""
    if basis.defect_minus < 1 or basis.defect_plus < 1:
        raise DeterminateInputError(
            "structure matrices need an indeterminate section "
            f"(defect estimates {basis.defect_minus}, {basis.defect_plus})"
        )
    with mp.workprec(basis.precision):
        compression = _table(basis.v, basis.u)
        w_cross = _table(basis.v_prime, basis.u)
        t_cross = _table(basis.v_prime, basis.u_prime)
        c0_base = _table(basis.v, basis.u_prime)
        y_minus = y_coords(model, "-")[: basis.block_size]
        k_map = _table(y_minus, basis.u[: basis.rho])
    return StructureMatrices(
        compression=compression,
        w_cross=w_cross,
        t_cross=t_cross,
        c0_base=c0_base,
        k_map=k_map,
        rho=basis.rho,
        tau=basis.tau,
        defect_minus=basis.defect_minus,
        defect_plus=basis.defect_plus,
        block_size=basis.block_size,
        section_size=basis.section_size,
        precision=basis.precision,
    )


def _table(vectors, against):
    """Matrix with entry (j, k) = (vectors[k], against[j])."""
    out = np.empty((len(against), len(vectors)), dtype=complex)
    for j, u in enumerate(against):
        for k, v in enumerate(vectors):
            out[j, k] = mpc_to_complex(inner(v, u))
    return out


def resolvent_section(sm: StructureMatrices, zeta: complex) -> np.ndarray:
    """(I - zeta * compression)^{-1} by direct solve on the section.

    Valid for |zeta| < 1; since the compression is a contraction up to
    roundoff, a singular solve can only come from a corrupted basis and
    is re-raised as fatal.
    """
    zeta = complex(zeta)
    if abs(zeta) >= 1:
        raise ValueError(f"zeta must lie in the open unit disc, got |zeta| = {abs(zeta)}")
    n = sm.tau
    lhs = np.eye(n, dtype=complex) - zeta * sm.compression
    try:
        return np.linalg.solve(lhs, np.eye(n, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "resolvent solve failed although ||zeta * compression|| < 1; "
            "the basis data is corrupted"
        ) from exc


def phi_delta(seq: MomentSequence, z: complex) -> np.ndarray:
    """The NxN polynomial-coefficient matrix combining S_0, S_1, S_2.

    Entry (j, k) is
        G(k+N, j+N) - i G(k, j+N) + z G(k+N, j) + (z^2 - i z + 1) G(k, j)
    with G the scalar Hankel entry; entire in z.
    """
    n = seq.block_size
    if seq.count < 3:
        raise InsufficientMomentsError("need S_0, S_1, S_2 for the coefficient matrix")
    z = complex(z)
    out = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            g_kn_jn = mpc_to_complex(hankel_entry(seq, k + n, j + n))
            g_k_jn = mpc_to_complex(hankel_entry(seq, k, j + n))
            g_kn_j = mpc_to_complex(hankel_entry(seq, k + n, j))
            g_k_j = mpc_to_complex(hankel_entry(seq, k, j))
            out[j, k] = (
                g_kn_jn
                - 1j * g_k_jn
                + z * g_kn_j
                + (z * z - 1j * z + 1) * g_k_j
            )
    return out


def coefficients(sm: StructureMatrices, seq: MomentSequence, z: complex,
                 eps_pole: float = EPS_POLE) -> NevanlinnaCoefficients:
    """Assemble the four coefficient matrices at z in C_+ \\ {i}.

    With R = (I - zeta V)^{-1} and its leading rho-sized blocks R1 (rows
    and columns), R2 (rows), R3 (columns):

        a = 2i K^H R1 K - (z+i) Delta(z)
        b = -2i zeta K^H R2 W
        c = zeta (C0 R W - T)
        d = C0 R3 K

    where C0 = -zeta * c0_base.
    """
    z = complex(z)
    if z.imag <= 0:
        raise HalfPlaneError(f"z = {z} is not in the open upper half plane")
    if abs(z - 1j) < eps_pole:
        raise ExcludedPointError(
            f"z = {z} is within {eps_pole} of the excluded point i"
        )
    zeta = (z - 1j) / (z + 1j)
    rho = sm.rho
    resolvent = resolvent_section(sm, zeta)
    r1 = resolvent[:rho, :rho]
    r2 = resolvent[:rho, :]
    r3 = resolvent[:, :rho]
    c0 = -zeta * sm.c0_base
    k = sm.k_map
    kh = k.conj().T
    delta_mat = phi_delta(seq, z)
    a = 2j * (kh @ r1 @ k) - (z + 1j) * delta_mat
    b = -2j * zeta * (kh @ r2 @ sm.w_cross)
    c = zeta * (c0 @ resolvent @ sm.w_cross - sm.t_cross)
    d = c0 @ r3 @ k
    return NevanlinnaCoefficients(
        z=z,
        zeta=zeta,
        a=a,
        b=b,
        c=c,
        d=d,
        section_size=sm.section_size,
        tau=sm.tau,
    )
