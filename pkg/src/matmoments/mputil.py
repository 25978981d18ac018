"""Multiprecision linear-algebra helpers used by the main pipeline.

Vectors are plain lists/tuples of ``mpmath.mpc``.  The inner product is
linear in the FIRST argument and conjugates the second,

    inner(a, b) = sum_i a[i] * conj(b[i]),

so that the coefficient of a unit vector ``u`` in ``w`` is ``inner(w, u)``.
All routines run at the ambient mpmath precision; callers wrap them in
``mp.workprec(bits)``.
"""

from __future__ import annotations

from mpmath import mp, mpc, mpf

import numpy as np


def inner(a, b):
    """Inner product, linear in ``a``, conjugating ``b``."""
    return mp.fdot(a, b, conjugate=True)


def norm(v):
    """Euclidean norm of a complex vector."""
    return mp.sqrt(abs(inner(v, v)))


def to_mpc(x):
    if isinstance(x, mpc):
        return x
    if isinstance(x, complex):
        return mpc(x.real, x.imag)
    return mpc(x)


def vec_scale(alpha, v):
    return [alpha * x for x in v]


def vec_sub_scaled(w, alpha, u):
    """w - alpha*u, elementwise."""
    return [wx - alpha * ux for wx, ux in zip(w, u)]


class OrthoResult:
    """Outcome of a deflating modified Gram-Schmidt pass.

    Attributes
    ----------
    basis : list of vectors
        The retained orthonormal vectors, in processing order.
    rows : list of lists of mpc
        rows[k][j] is the coefficient of input vector j in basis[k]
        (lower triangular over the original input ordering; entries for
        deflated inputs stay zero).
    kept : list of int
        Original indices of the inputs that produced basis vectors.
    """

    def __init__(self, basis, rows, kept):
        self.basis = basis
        self.rows = rows
        self.kept = kept

    def __len__(self):
        return len(self.basis)


def gram_schmidt(vectors, deflate_tol, against=(), track_rows=True):
    """Modified Gram-Schmidt with reorthogonalization and deflation.

    Each input is first projected off the fixed orthonormal family
    ``against`` and the previously retained vectors, twice (the second
    pass keeps the orthogonality loss near unit roundoff).  An input is
    deflated when its residual norm falls below ``deflate_tol`` times its
    original norm; inputs with zero original norm are deflated outright.
    """
    basis = []
    rows = [] if track_rows else None
    kept = []
    for idx, v in enumerate(vectors):
        w = list(v)
        orig = norm(v)
        if orig == 0:
            continue
        row = None
        if track_rows:
            row = [mpc(0)] * (idx + 1)
            row[idx] = mpc(1)
        for _ in range(2):
            for u in against:
                c = inner(w, u)
                w = vec_sub_scaled(w, c, u)
            for pos, u in enumerate(basis):
                c = inner(w, u)
                w = vec_sub_scaled(w, c, u)
                if track_rows:
                    urow = rows[pos]
                    for j in range(len(urow)):
                        row[j] -= c * urow[j]
        resid = norm(w)
        if resid <= deflate_tol * orig:
            continue
        inv = 1 / resid
        basis.append(vec_scale(inv, w))
        if track_rows:
            rows.append([x * inv for x in row])
        kept.append(idx)
    return OrthoResult(basis, rows, kept)


def eigh_mp(a):
    """Eigendecomposition of a Hermitian mpmath matrix.

    Returns (eigenvalues ascending as a list of mpf, eigenvector matrix Q
    with eigenvectors in columns).  Dispatches to the real-symmetric
    routine when every entry has zero imaginary part.
    """
    n = a.rows
    is_real = all(mp.im(a[i, j]) == 0 for i in range(n) for j in range(i, n))
    if is_real:
        b = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                b[i, j] = mp.re(a[i, j])
        evals, q = mp.eigsy(b)
    else:
        evals, q = mp.eighe(a)
    return [evals[i] for i in range(n)], q


def hermitian_defect(a):
    """max |a - a^H| entrywise, for an mpmath matrix."""
    worst = mpf(0)
    for i in range(a.rows):
        for j in range(a.cols):
            d = abs(a[i, j] - mp.conj(a[j, i]))
            if d > worst:
                worst = d
    return worst


def matrix_to_numpy(a):
    """Downcast an mpmath matrix to a complex128 ndarray."""
    out = np.empty((a.rows, a.cols), dtype=complex)
    for i in range(a.rows):
        for j in range(a.cols):
            z = a[i, j]
            out[i, j] = complex(float(mp.re(z)), float(mp.im(z)))
    return out


def mpc_to_complex(z):
    z = to_mpc(z)
    return complex(float(mp.re(z)), float(mp.im(z)))


def number_to_json(x):
    """Encode an mpf/mpc real part as a decimal string that round-trips
    at the current precision."""
    digits = int(mp.prec / 3.32193) + 3
    return mp.nstr(x, digits, strip_zeros=True, min_fixed=1, max_fixed=0)


def number_from_json(val):
    """Decode a JSON number or decimal string to mpf."""
    if isinstance(val, str):
        return mpf(val)
    if isinstance(val, (int, float)):
        return mpf(val)
    raise TypeError(f"cannot parse real number from {val!r}")
