"""Rolling-sample out-of-sample backtest.

Every ``reestimate_every`` trading days the engine estimates a covariance
matrix from the trailing ``window_days`` rows (minus any exclusion windows,
which apply to estimation only), factors it, and computes the optimal and
equal-weight target vectors. Weights are re-fixed to the target every day;
day-t returns use only data through day t-1. Accounting always runs on the
full return series, including excluded dates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import DateRange, ReturnPanel
from .errors import (
    InsufficientHistory,
    InsufficientObservations,
    MissingData,
    NotPositiveDefinite,
    SingularCovariance,
    TooFewObservations,
    ZeroVariance,
)
from .factorization import (
    CovMatrix,
    TargetMatrix,
    cholesky,
    procrustes_rotate,
    sym_sqrt,
)
from .model import TRADING_DAYS_PER_YEAR
from .stats import jobson_korkie_memmel, sharpe
from .strategy import one_over_n, pi_star_fully_invested

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "FACTORIZATIONS",
    "estimate_covariance",
    "estimation_window",
    "rolling_backtest",
]

FACTORIZATIONS = ("cholesky", "sym_sqrt", "rotate")

#: Week of 1987-10-19, excluded from covariance estimation by default. A
#: no-op for panels that do not span it.
BLACK_MONDAY_WEEK = DateRange(19871019, 19871023)


@dataclass(frozen=True)
class BacktestConfig:
    """Engine settings; defaults are a 5-year window re-estimated monthly.

    ``exclusion_windows`` removes dates from estimation samples only, never
    from return accounting. ``shrinkage`` (when set) repairs non-PD sample
    covariances instead of failing. ``rotation_target`` is required when
    ``factorization`` is 'rotate'.
    """

    window_days: int = 1260
    reestimate_every: int = 20
    factorization: str = "sym_sqrt"
    exposure: float = 1.0
    rf_annual: float = 0.03
    exclusion_windows: tuple[DateRange, ...] = (BLACK_MONDAY_WEEK,)
    shrinkage: float | None = None
    rotation_target: np.ndarray | None = None

    def __post_init__(self):
        if self.window_days <= 0 or self.reestimate_every <= 0:
            raise ValueError("window_days and reestimate_every must be positive")
        if self.window_days <= self.reestimate_every:
            raise ValueError("window_days must exceed reestimate_every")
        if not math.isfinite(self.exposure):
            raise ValueError("exposure must be finite")
        if not math.isfinite(self.rf_annual):
            raise ValueError("rf_annual must be finite")
        if self.factorization not in FACTORIZATIONS:
            raise ValueError(
                f"factorization must be one of {FACTORIZATIONS}, "
                f"got {self.factorization!r}"
            )
        if self.factorization == "rotate":
            if self.rotation_target is None:
                raise ValueError("factorization 'rotate' needs rotation_target")
            target = np.asarray(self.rotation_target, dtype=float)
            target.setflags(write=False)
            object.__setattr__(self, "rotation_target", target)
        if self.shrinkage is not None and not self.shrinkage > 0.0:
            raise ValueError("shrinkage must be positive when set")
        object.__setattr__(self, "exclusion_windows", tuple(self.exclusion_windows))

    @property
    def rf_daily(self) -> float:
        return self.rf_annual / TRADING_DAYS_PER_YEAR


@dataclass(frozen=True)
class BacktestReport:
    """Out-of-sample return series, weight history, and summary statistics.

    When the Sharpe machinery cannot run (degenerate return series) the
    four statistic fields are NaN and ``stats_error`` says why.
    """

    dates: np.ndarray
    strategy_returns: np.ndarray
    benchmark_returns: np.ndarray
    rebalance_dates: np.ndarray
    weight_history: np.ndarray
    assets: tuple[str, ...]
    exposure: float
    sharpe_strategy: float
    sharpe_benchmark: float
    jk_z: float
    jk_p: float
    terminal_wealth_ratio: float
    volatility_ratio: float
    stats_error: str | None = None
    config: BacktestConfig = field(default=None, repr=False)

    def __post_init__(self):
        for name in (
            "dates",
            "strategy_returns",
            "benchmark_returns",
            "rebalance_dates",
            "weight_history",
        ):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.weight_history.ndim != 2 or self.weight_history.shape[1] != len(self.assets):
            raise ValueError("weight_history shape does not match assets")
        sums = self.weight_history.sum(axis=1)
        scale = max(1.0, abs(self.exposure))
        if self.weight_history.size and np.max(np.abs(sums - self.exposure)) > 1e-10 * scale:
            raise ValueError("a stored weight row does not sum to the exposure")


def estimate_covariance(window: ReturnPanel, shrinkage: float | None = None) -> CovMatrix:
    """Unbiased sample covariance (divisor m - 1) of a panel's daily returns.

    Raises MissingData on any masked cell (no imputation, ever) and
    InsufficientObservations below n + 1 rows. Non-PD results raise through
    CovMatrix unless ``shrinkage`` repairs them.
    """
    if np.any(window.missing_mask):
        i, j = np.argwhere(window.missing_mask)[0]
        date = int(window.dates[i])
        asset = window.assets[j]
        raise MissingData(
            f"masked value at date {date}, asset {asset} inside an estimation window",
            date=date,
            asset=asset,
        )
    m, n = window.returns.shape
    if m < n + 1:
        raise InsufficientObservations(
            f"need at least {n + 1} observations for {n} assets, got {m}"
        )
    c = np.cov(window.returns, rowvar=False, ddof=1)
    c = np.atleast_2d(c)
    c = 0.5 * (c + c.T)
    return CovMatrix(c, shrinkage=shrinkage)


def estimation_window(panel: ReturnPanel, end_row: int, config: BacktestConfig) -> ReturnPanel:
    """The estimation sample for weights taking effect at row ``end_row``.

    Trailing ``window_days`` rows strictly before ``end_row``, minus rows
    whose dates fall in an exclusion window. Exposed so callers can
    reproduce the engine's inputs exactly.
    """
    window = panel.take_rows(end_row - config.window_days, end_row)
    if not config.exclusion_windows:
        return window
    keep = np.ones(window.n_dates, dtype=bool)
    for rng in config.exclusion_windows:
        keep &= ~((window.dates >= rng.start) & (window.dates <= rng.end))
    if np.all(keep):
        return window
    return ReturnPanel(
        dates=window.dates[keep],
        assets=window.assets,
        returns=window.returns[keep],
        missing_mask=window.missing_mask[keep],
    )


def _factor(cov: CovMatrix, config: BacktestConfig):
    if config.factorization == "cholesky":
        return cholesky(cov)
    if config.factorization == "sym_sqrt":
        return sym_sqrt(cov)
    rotated, _ = procrustes_rotate(cholesky(cov), TargetMatrix(config.rotation_target))
    return rotated


def rolling_backtest(panel: ReturnPanel, config: BacktestConfig | None = None) -> BacktestReport:
    """Run the rolling out-of-sample protocol over a full return panel."""
    if config is None:
        config = BacktestConfig()
    complete = int(np.sum(~np.any(panel.missing_mask, axis=1)))
    needed = config.window_days + config.reestimate_every
    if complete < needed:
        raise InsufficientHistory(
            f"panel has {complete} complete rows; need at least {needed} "
            f"(window {config.window_days} + cadence {config.reestimate_every})"
        )

    n = panel.n_assets
    rf_daily = config.rf_daily
    bench = one_over_n(n, exposure=config.exposure).weights
    bench_cash = 1.0 - float(bench.sum())

    strat_returns: list[float] = []
    bench_returns: list[float] = []
    rebal_dates: list[int] = []
    weight_rows: list[np.ndarray] = []
    weights: np.ndarray | None = None
    cash = 0.0

    for t in range(config.window_days, panel.n_dates):
        if (t - config.window_days) % config.reestimate_every == 0:
            sample = estimation_window(panel, t, config)
            try:
                cov = estimate_covariance(sample, shrinkage=config.shrinkage)
            except NotPositiveDefinite as exc:
                raise SingularCovariance(
                    f"estimation window ending before date {int(panel.dates[t])} "
                    f"is not factorable: {exc}"
                ) from exc
            vol = _factor(cov, config)
            weights = pi_star_fully_invested(vol, exposure=config.exposure).weights
            cash = 1.0 - float(weights.sum())
            rebal_dates.append(int(panel.dates[t]))
            weight_rows.append(weights)

        row = panel.returns[t]
        if np.any(panel.missing_mask[t]):
            j = int(np.flatnonzero(panel.missing_mask[t])[0])
            raise MissingData(
                f"masked return on accounting date {int(panel.dates[t])}, "
                f"asset {panel.assets[j]}",
                date=int(panel.dates[t]),
                asset=panel.assets[j],
            )
        strat_returns.append(float(weights @ row) + cash * rf_daily)
        bench_returns.append(float(bench @ row) + bench_cash * rf_daily)

    strat = np.array(strat_returns)
    bench_series = np.array(bench_returns)
    dates = panel.dates[config.window_days:]

    stats_error = None
    s_strat = s_bench = jk_z = jk_p = math.nan
    try:
        s_strat = sharpe(strat, rf_daily).ratio
        s_bench = sharpe(bench_series, rf_daily).ratio
        jk = jobson_korkie_memmel(strat - rf_daily, bench_series - rf_daily)
        jk_z, jk_p = jk.z, jk.p_one_sided
    except (ZeroVariance, TooFewObservations) as exc:
        stats_error = f"{type(exc).__name__}: {exc}"
        s_strat = s_bench = jk_z = jk_p = math.nan

    wealth_ratio = float(np.prod(1.0 + strat) / np.prod(1.0 + bench_series))
    sd_strat = float(strat.std(ddof=1)) if strat.size > 1 else math.nan
    sd_bench = float(bench_series.std(ddof=1)) if bench_series.size > 1 else math.nan
    vol_ratio = sd_strat / sd_bench if sd_bench and not math.isnan(sd_bench) else math.nan

    return BacktestReport(
        dates=dates,
        strategy_returns=strat,
        benchmark_returns=bench_series,
        rebalance_dates=np.array(rebal_dates, dtype=np.int64),
        weight_history=np.array(weight_rows),
        assets=panel.assets,
        exposure=config.exposure,
        sharpe_strategy=s_strat,
        sharpe_benchmark=s_bench,
        jk_z=jk_z,
        jk_p=jk_p,
        terminal_wealth_ratio=wealth_ratio,
        volatility_ratio=vol_ratio,
        stats_error=stats_error,
        config=config,
    )
