"""Monte Carlo simulation of the stock model and the optimal-wealth law.

Stock paths are sampled from the exact lognormal transition of the model
(no Euler bias), and wealth processes are replayed through the exact
exponential wealth equation with piecewise-constant driver exposures, using
the same retained Brownian increments, so competing strategies are always
compared on common noise.

The closed-form law of the optimal wealth is lognormal:
``log W(t) ~ Normal(log w + (lambda - kappa^2 / (2n)) t, kappa^2 t / n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveGridPoint
from .model import ModelParams
from .strategy import PolicySource, WeightVector

__all__ = [
    "PathSet",
    "WealthLaw",
    "simulate_paths",
    "replay_wealth",
    "optimal_wealth_moments",
    "optimal_wealth_density",
]


@dataclass(frozen=True)
class PathSet:
    """Simulated stock paths plus the Brownian increments that drove them.

    ``prices`` has shape (paths, steps + 1, assets) including the t = 0
    row; ``driver_increments`` has shape (paths, steps, drivers) and is
    retained so wealth replay runs on identical randomness.
    """

    times: np.ndarray
    prices: np.ndarray
    driver_increments: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("times", "prices", "driver_increments"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.prices.ndim != 3 or self.driver_increments.ndim != 3:
            raise ValueError("prices and driver_increments must be 3-d arrays")
        if not np.all(self.prices > 0.0):
            raise ValueError("prices must be strictly positive")

    @property
    def n_paths(self) -> int:
        return self.prices.shape[0]

    @property
    def n_steps(self) -> int:
        return self.driver_increments.shape[1]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[2]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _per_path_increments(seed: int, n_paths: int, steps: int, n: int, dt: float) -> np.ndarray:
    """Brownian increments, one dedicated substream per path.

    Path i draws from the seed stream jumped i times, so path i's noise
    depends only on (seed, i): results do not change if path generation is
    later partitioned across workers.
    """
    base = np.random.PCG64(seed)
    out = np.empty((n_paths, steps, n))
    scale = math.sqrt(dt)
    for i in range(n_paths):
        gen = np.random.Generator(base.jumped(i))
        out[i] = scale * gen.standard_normal((steps, n))
    return out


def simulate_paths(
    params: ModelParams,
    horizon: float,
    steps: int,
    n_paths: int,
    seed: int,
) -> PathSet:
    """Sample stock paths on a uniform grid over [0, horizon].

    Sampling is exact in distribution: per-step log increments are
    ``(r - 0.5 sum_j sigma_ij^2 + (mu - r) sum_j sigma_ij) dt
    + sum_j sigma_ij dB_j``, so moment tests carry no discretization bias.
    Deterministic for a fixed seed.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if steps < 1 or n_paths < 1:
        raise ValueError("steps and n_paths must be >= 1")
    sig = params.sigma.entries
    n = params.n
    dt = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)

    row_sq = (sig ** 2).sum(axis=1)
    row_sum = sig.sum(axis=1)
    drift = (params.r - 0.5 * row_sq + (params.mu - params.r) * row_sum) * dt

    increments = _per_path_increments(seed, n_paths, steps, n, dt)
    log_steps = increments @ sig.T + drift
    log_paths = np.cumsum(log_steps, axis=1)
    log_prices = np.concatenate(
        [np.zeros((n_paths, 1, n)), log_paths], axis=1
    ) + np.log(params.s0)
    return PathSet(
        times=times,
        prices=np.exp(log_prices),
        driver_increments=increments,
        seed=seed,
    )


def _policy_weights(policy: PolicySource, step: int, n: int) -> np.ndarray:
    pi = policy(step) if callable(policy) else policy
    if not isinstance(pi, WeightVector):
        raise TypeError("policy must yield WeightVector instances")
    if pi.n != n:
        raise DimensionMismatch(
            f"policy weights have length {pi.n}, expected {n}"
        )
    return pi.weights


def replay_wealth(
    paths: PathSet,
    policy: PolicySource,
    params: ModelParams,
    w0: float,
) -> np.ndarray:
    """Terminal wealth per path under a (possibly per-step) weight policy.

    Wealth follows the exact exponential wealth equation with the driver
    exposures p = sigma' pi held constant within each step, driven by the
    path set's retained increments; every terminal wealth is therefore
    strictly positive.
    """
    if w0 <= 0.0:
        raise ValueError("initial wealth must be positive")
    sig = params.sigma.entries
    n = params.n
    if paths.n_assets != n:
        raise DimensionMismatch(
            f"path set has {paths.n_assets} assets but parameters have {n}"
        )
    dt = paths.dt
    excess = params.mu - params.r

    log_w = np.zeros(paths.n_paths)
    for k in range(paths.n_steps):
        p = sig.T @ _policy_weights(policy, k, n)
        log_w += (p.sum() * excess - 0.5 * (p ** 2).sum() + params.r) * dt
        log_w += paths.driver_increments[:, k, :] @ p
    return w0 * np.exp(log_w)


@dataclass(frozen=True)
class WealthLaw:
    """Closed-form lognormal law of the optimal wealth at horizon t.

    ``kappa`` is (lambda - r)/(mu - r); the law depends on the volatility
    matrix only through kappa and the asset count n.
    """

    w: float
    lam: float
    kappa: float
    n: int
    t: float

    def __post_init__(self):
        if self.w <= 0.0:
            raise ValueError("initial wealth must be positive")
        if self.n < 1:
            raise ValueError("asset count must be >= 1")
        if self.t < 0.0:
            raise ValueError("horizon must be nonnegative")
        if not self.kappa >= 0.0:
            raise ValueError("kappa must be nonnegative")

    @classmethod
    def from_rates(cls, w: float, lam: float, mu: float, r: float, n: int, t: float) -> "WealthLaw":
        """Build the law from explicit rates; kappa = (lam - r)/(mu - r)."""
        if mu <= r:
            raise ValueError("mu must exceed r")
        if lam < r:
            raise ValueError("lambda must be >= r")
        return cls(w=w, lam=lam, kappa=(lam - r) / (mu - r), n=n, t=t)

    @property
    def log_mean(self) -> float:
        return math.log(self.w) + (self.lam - self.kappa ** 2 / (2 * self.n)) * self.t

    @property
    def log_sd(self) -> float:
        return self.kappa * math.sqrt(self.t / self.n)


def optimal_wealth_moments(law: WealthLaw) -> tuple[float, float]:
    """Mean and variance of the optimal terminal wealth.

    mean = w e^{lam t};  variance = w^2 e^{2 lam t} (e^{kappa^2 t / n} - 1).
    """
    mean = law.w * math.exp(law.lam * law.t)
    variance = law.w ** 2 * math.exp(2 * law.lam * law.t) * math.expm1(
        law.kappa ** 2 * law.t / law.n
    )
    return mean, variance


def optimal_wealth_density(law: WealthLaw, grid) -> np.ndarray:
    """Lognormal density of the optimal wealth evaluated on a grid of levels."""
    x = np.asarray(grid, dtype=float)
    if np.any(x <= 0.0):
        raise NonPositiveGridPoint("wealth levels must be strictly positive")
    s = law.log_sd
    if s <= 0.0:
        raise ValueError("law is degenerate (zero log-sd); density undefined")
    z = (np.log(x) - law.log_mean) / s
    return np.exp(-0.5 * z ** 2) / (x * s * math.sqrt(2.0 * math.pi))
