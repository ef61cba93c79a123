"""Optimal portfolio weights for the equal-drift model.

The variance-minimizing strategy holds an equal exposure to every Brownian
driver: its weights solve ``sigma' pi = (kappa / n) * 1`` where
``kappa = (lambda - r) / (mu - r)``.  Choosing the total fraction of wealth
invested in stocks pins down kappa without estimating mu, r or lambda, which
is how the fully-invested variant is used in practice.  The classical 1/n
allocation is provided as the benchmark.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateExposure, DimensionMismatch, SingularMatrix
from .factorization import VolMatrix

__all__ = [
    "WeightVector",
    "ExposureVector",
    "pi_star",
    "pi_star_fully_invested",
    "one_over_n",
    "brownian_exposures",
    "oversized_positions",
]

#: Max-norm residual allowed on the driver-exposure equations, relative to kappa.
RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class WeightVector:
    """Fractions of wealth per asset; negatives allowed.

    ``kappa`` is the composite ratio (lambda - r)/(mu - r) associated with
    the weights, or ``None`` for strategies (like 1/n) where the ratio is
    not applicable.  ``exposure`` is the sum of the weights.
    """

    weights: np.ndarray
    kappa: float | None
    exposure: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        scale = max(1.0, float(np.abs(w).sum()))
        if abs(self.exposure - float(w.sum())) > 1e-12 * scale:
            raise ValueError("exposure does not equal the sum of the weights")

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ExposureVector:
    """Portfolio loadings on the Brownian drivers: p_j = sum_i pi_i sigma_ij."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or not np.all(np.isfinite(p)):
            raise ValueError("exposures must be a finite vector")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


PolicySource = Union[WeightVector, Callable[[int], WeightVector]]


def _is_lower_triangular(a: np.ndarray) -> bool:
    return not np.any(np.triu(a, 1))


def _is_upper_triangular(a: np.ndarray) -> bool:
    return not np.any(np.tril(a, -1))


def _solve_unit_exposures(sigma: VolMatrix) -> np.ndarray:
    """Solve sigma' x = 1 with one step of iterative refinement.

    Triangular factors use direct substitution; anything else goes through
    the generic LU solve.  The refinement step keeps the residual near
    machine precision even for moderately ill-conditioned factors.
    """
    a = sigma.entries.T
    ones = np.ones(sigma.dim)

    if _is_lower_triangular(a):
        def solve(rhs):
            return solve_triangular(a, rhs, lower=True)
    elif _is_upper_triangular(a):
        def solve(rhs):
            return solve_triangular(a, rhs, lower=False)
    else:
        def solve(rhs):
            return np.linalg.solve(a, rhs)

    try:
        x = solve(ones)
        x = x - solve(a @ x - ones)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"volatility matrix solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("volatility matrix solve produced non-finite weights")
    return x


def pi_star(sigma: VolMatrix, kappa: float) -> WeightVector:
    """Weights equalizing every Brownian-driver exposure at kappa / n.

    Solves ``sigma' pi = (kappa / n) * 1`` and verifies the residual; a
    solve that cannot meet the residual contract raises SingularMatrix.
    """
    if not kappa > 0.0:
        raise ValueError("kappa must be positive")
    x = _solve_unit_exposures(sigma)
    return _scale_unit_solution(sigma, x, kappa)


def _scale_unit_solution(sigma: VolMatrix, x: np.ndarray, kappa: float) -> WeightVector:
    n = sigma.dim
    target = kappa / n
    pi = target * x
    residual = np.abs(sigma.entries.T @ pi - target).max()
    if residual > RESIDUAL_RTOL * abs(kappa):
        raise SingularMatrix(
            f"driver-exposure residual {residual:.3e} exceeds "
            f"{RESIDUAL_RTOL:.0e} * kappa; matrix too ill-conditioned"
        )
    return WeightVector(weights=pi, kappa=kappa, exposure=float(pi.sum()))


def pi_star_fully_invested(sigma: VolMatrix, exposure: float) -> WeightVector:
    """Optimal weights scaled so the fractions of wealth sum to ``exposure``.

    The total-exposure constraint determines kappa = n * exposure / (1'
    (sigma')^-1 1), so no drift or rate parameters are needed.  Negative
    exposure requests are honored but flagged, since the optimality
    argument assumes a nonnegative total driver exposure.
    """
    if exposure == 0.0:
        raise ValueError("exposure must be nonzero")
    x = _solve_unit_exposures(sigma)
    s = float(x.sum())
    if abs(s) <= 1e-12 * float(np.abs(x).sum()):
        raise DegenerateExposure(
            "unnormalized optimal weights sum to ~0; no finite kappa reaches "
            "the requested exposure"
        )
    kappa = sigma.dim * exposure / s
    if kappa < 0.0:
        warnings.warn(
            "requested exposure implies a negative kappa; the optimality "
            "argument assumes nonnegative total driver exposure",
            stacklevel=2,
        )
    return _scale_unit_solution(sigma, x, kappa)


def one_over_n(n: int, exposure: float = 1.0) -> WeightVector:
    """Classical benchmark: equal capital weight exposure / n in every asset.

    The kappa field is None; the ratio is not defined for this strategy.
    """
    if n < 1:
        raise ValueError("asset count must be >= 1")
    weights = np.full(n, exposure / n)
    return WeightVector(weights=weights, kappa=None, exposure=float(weights.sum()))


def brownian_exposures(pi: WeightVector, sigma: VolMatrix) -> ExposureVector:
    """Driver loadings p_j = sum_i pi_i sigma_ij of a weight vector."""
    if pi.n != sigma.dim:
        raise DimensionMismatch(
            f"weights have length {pi.n} but volatility matrix is {sigma.dim}x{sigma.dim}"
        )
    return ExposureVector(p=sigma.entries.T @ pi.weights)


def oversized_positions(pi: WeightVector, limit: float = 1.0) -> list[int]:
    """Indices of assets with |weight| above ``limit``; reporting only.

    Large or negative positions are legitimate for the optimal strategy, so
    this never alters the weights.
    """
    return [int(i) for i in np.flatnonzero(np.abs(pi.weights) > limit)]
