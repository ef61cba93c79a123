"""Volatility-matrix construction from covariance matrices.

A covariance matrix C admits many factors sigma with sigma sigma' = C.  This
module provides the three constructions the toolkit uses: the lower-triangular
Cholesky factor, the symmetric matrix square root, and the least-squares
rotation of a factor toward an investor-chosen target matrix, together with
the validated matrix types they operate on.

All operations are pure functions; the matrix types are immutable.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite, SingularMatrix

__all__ = [
    "CovMatrix",
    "VolMatrix",
    "TargetMatrix",
    "RotationMatrix",
    "cholesky",
    "sym_sqrt",
    "procrustes_rotate",
    "recover_cholesky",
    "random_rotation",
    "read_matrix_csv",
    "write_matrix_csv",
]

#: Relative tolerance for the symmetry check on covariance input.
SYMMETRY_RTOL = 1e-12

#: Default diagonal-shrinkage coefficient when repair is enabled.
DEFAULT_SHRINKAGE = 1e-6

#: Factors must reproduce their source covariance to this relative accuracy.
FACTOR_RTOL = 1e-9

_PROVENANCES = ("cholesky", "sym_sqrt", "rotated", "user")


def _as_square(entries, name: str) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square 2-d matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


class CovMatrix:
    """Symmetric positive-definite covariance of per-period returns.

    Positive-definiteness is enforced at construction.  When ``shrinkage``
    is given, a failing matrix is repaired by adding
    ``shrinkage * mean(diag(C))`` to the diagonal before re-checking (plain
    ``shrinkage`` when the diagonal is identically zero, so an all-zero
    sample covariance still gets a usable repair).
    """

    __slots__ = ("entries", "dim")

    def __init__(self, entries, shrinkage: float | None = None):
        a = _as_square(entries, "covariance matrix")
        scale = np.abs(a).max()
        if scale > 0 and np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("covariance matrix is not symmetric within tolerance")
        if np.linalg.eigvalsh(a).min() <= 0.0:
            if shrinkage is None:
                raise NotPositiveDefinite(
                    "covariance matrix has a non-positive eigenvalue"
                )
            mean_var = float(np.diag(a).mean())
            bump = shrinkage * mean_var if mean_var > 0.0 else shrinkage
            repaired = a + bump * np.eye(a.shape[0])
            if np.linalg.eigvalsh(repaired).min() <= 0.0:
                raise NotPositiveDefinite(
                    "covariance matrix is not positive-definite even after "
                    f"diagonal shrinkage (delta={shrinkage})"
                )
            repaired.setflags(write=False)
            a = repaired
        self.entries = a
        self.dim = a.shape[0]

    def __repr__(self):
        return f"CovMatrix(dim={self.dim})"


class VolMatrix:
    """Non-singular n x n factor sigma of a covariance matrix.

    ``provenance`` records how the factor was constructed; for any value
    other than ``"user"`` the constructor verifies that ``sigma sigma'``
    reproduces the supplied source covariance within ``FACTOR_RTOL``
    relative Frobenius norm.
    """

    __slots__ = ("entries", "dim", "provenance")

    def __init__(self, entries, provenance: str = "user", source: np.ndarray | None = None):
        a = _as_square(entries, "volatility matrix")
        if provenance not in _PROVENANCES:
            raise ValueError(f"unknown provenance {provenance!r}")
        n = a.shape[0]
        svals = np.linalg.svd(a, compute_uv=False)
        if svals[0] == 0.0 or svals[-1] <= n * 1e-13 * svals[0]:
            raise SingularMatrix("volatility matrix is singular within tolerance")
        if provenance != "user" and source is not None:
            c = np.asarray(source, dtype=float)
            resid = np.linalg.norm(a @ a.T - c) / np.linalg.norm(c)
            if resid > FACTOR_RTOL:
                raise ValueError(
                    f"factor does not reproduce its source covariance "
                    f"(relative residual {resid:.3e})"
                )
        self.entries = a
        self.dim = n
        self.provenance = provenance

    def cov(self) -> np.ndarray:
        """Covariance matrix sigma sigma' implied by this factor."""
        return self.entries @ self.entries.T

    def __repr__(self):
        return f"VolMatrix(dim={self.dim}, provenance={self.provenance!r})"


class TargetMatrix:
    """Investor-specified target for the rotation fit.  Entries unconstrained."""

    __slots__ = ("entries", "dim")

    def __init__(self, entries):
        self.entries = _as_square(entries, "target matrix")
        self.dim = self.entries.shape[0]


class RotationMatrix:
    """Orthogonal n x n matrix; rotations and reflections both allowed."""

    __slots__ = ("entries", "dim")

    ORTHOGONALITY_TOL = 1e-10

    def __init__(self, entries):
        a = _as_square(entries, "rotation matrix")
        n = a.shape[0]
        if np.linalg.norm(a @ a.T - np.eye(n)) > self.ORTHOGONALITY_TOL:
            raise ValueError("matrix is not orthogonal within tolerance")
        if abs(abs(np.linalg.det(a)) - 1.0) > self.ORTHOGONALITY_TOL:
            raise ValueError("matrix determinant is not +-1 within tolerance")
        self.entries = a
        self.dim = n

    def __repr__(self):
        return f"RotationMatrix(dim={self.dim})"


def cholesky(cov: CovMatrix) -> VolMatrix:
    """Lower-triangular factor L with L L' = C and strictly positive diagonal.

    Raises
    ------
    NotPositiveDefinite
        If an elimination pivot falls at or below ``dim * 1e-14 * max|C|``.
    """
    a = cov.entries
    n = cov.dim
    pivot_floor = n * 1e-14 * np.abs(a).max()
    lower = np.zeros((n, n))
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= pivot_floor:
            raise NotPositiveDefinite(
                f"elimination pivot {pivot:.3e} at column {j} is below the "
                f"positive-definiteness floor {pivot_floor:.3e}"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return VolMatrix(lower, "cholesky", source=a)


def sym_sqrt(cov: CovMatrix) -> VolMatrix:
    """Symmetric factor S with S S = C, via orthogonal eigendecomposition.

    Eigenvalues in ``[-dim * 1e-12 * lambda_max, 0]`` are treated as
    numerical noise and clamped to zero; the resulting singular factor is
    then rejected by the VolMatrix non-singularity check.
    """
    w, v = np.linalg.eigh(cov.entries)
    lam_max = w[-1]
    if lam_max <= 0.0:
        raise NotPositiveDefinite("covariance matrix has no positive eigenvalue")
    tol = cov.dim * 1e-12 * lam_max
    if w[0] < -tol:
        raise NotPositiveDefinite(
            f"covariance matrix has eigenvalue {w[0]:.3e} below -{tol:.3e}"
        )
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.T
    s = 0.5 * (s + s.T)
    return VolMatrix(s, "sym_sqrt", source=cov.entries)


def procrustes_rotate(factor: VolMatrix, target: TargetMatrix) -> tuple[VolMatrix, RotationMatrix]:
    """Rotate a factor toward a target matrix in the least-squares sense.

    Finds the orthogonal Q minimizing ``||L Q - T||_F`` (solution
    ``Q = U W'`` from the singular decomposition ``L'T = U S W'``) and
    returns ``(L Q, Q)``.  Reflections are admitted alongside rotations,
    since any orthogonal Q preserves ``(LQ)(LQ)' = L L'``.
    """
    if factor.dim != target.dim:
        raise DimensionMismatch(
            f"factor is {factor.dim}x{factor.dim} but target is {target.dim}x{target.dim}"
        )
    u, _, wt = np.linalg.svd(factor.entries.T @ target.entries)
    q = u @ wt
    rotated = factor.entries @ q
    source = factor.entries @ factor.entries.T
    return VolMatrix(rotated, "rotated", source=source), RotationMatrix(q)


def recover_cholesky(vol: VolMatrix) -> VolMatrix:
    """Recover the positive-diagonal Cholesky factor underlying any factor.

    Writes ``V = L Q`` with L lower triangular and Q orthogonal (QR of V'),
    resolving the sign ambiguity so that diag(L) > 0.  The result equals
    ``cholesky(V V')``.
    """
    q, r = np.linalg.qr(vol.entries.T)
    diag = np.diag(r)
    top = np.abs(diag).max()
    if top == 0.0 or np.abs(diag).min() <= vol.dim * 1e-13 * top:
        raise SingularMatrix("matrix is singular; no triangular factor exists")
    signs = np.where(diag < 0.0, -1.0, 1.0)
    lower = (signs[:, None] * r).T
    return VolMatrix(lower, "cholesky", source=vol.entries @ vol.entries.T)


def random_rotation(n: int, seed: int) -> RotationMatrix:
    """Draw an orthogonal matrix uniformly (Haar) over the orthogonal group.

    QR orthogonalization of a Gaussian matrix with the sign convention that
    makes the distribution Haar-uniform; deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((n, n))
    q, r = np.linalg.qr(gauss)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return RotationMatrix(q * signs)


def read_matrix_csv(path) -> np.ndarray:
    """Read a headerless row-major CSV matrix."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows in matrix file")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, matrix) -> None:
    """Write a matrix as headerless row-major CSV with round-trip precision."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")
