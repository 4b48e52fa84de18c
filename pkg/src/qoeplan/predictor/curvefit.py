"""Least-squares fit of a saturating exponential; oracle and fallback forecaster."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .lstm import Forecast

TAU_GRID_POINTS = 400


@dataclass(frozen=True)
class SaturatingFit:
    m0: float
    m_inf: float
    tau: float
    residual_rmse: float
    degenerate: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")

    def predict(self, epochs) -> np.ndarray:
        k = np.asarray(epochs, dtype=float)
        return self.m_inf + (self.m0 - self.m_inf) * np.exp(-k / self.tau)


def _solve_at(tau: float, k: np.ndarray, y: np.ndarray):
    phi = np.exp(-k / tau)
    design = np.column_stack([phi, 1.0 - phi])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(np.sqrt(np.mean(resid * resid)))


def fit_saturating_curve(series, start_epoch: int = 1) -> SaturatingFit:
    """Fit ``m_inf + (m0 - m_inf) * exp(-k / tau)`` to ``series``.

    ``series[0]`` is taken to be epoch ``start_epoch``. ``tau`` is searched
    on a log grid, then polished between the neighbours of the best grid
    point; for each candidate ``tau`` the pair ``(m0, m_inf)`` is the linear
    least-squares solution. A constant series is returned with
    ``degenerate=True`` and ``m0 == m_inf``.
    """
    y = np.asarray(series, dtype=float)
    if len(y) < 4:
        raise ValueError(f"need at least 4 points to fit, got {len(y)}")
    if np.ptp(y) == 0:
        return SaturatingFit(m0=float(y[0]), m_inf=float(y[0]), tau=1.0,
                             residual_rmse=0.0, degenerate=True)
    k = np.arange(start_epoch, start_epoch + len(y), dtype=float)

    grid = np.geomspace(0.1, 100.0 * k[-1], TAU_GRID_POINTS)
    rmse = np.array([_solve_at(t, k, y)[1] for t in grid])
    best = int(np.argmin(rmse))
    lo = np.log(grid[max(best - 1, 0)])
    hi = np.log(grid[min(best + 1, len(grid) - 1)])
    res = minimize_scalar(
        lambda lt: _solve_at(np.exp(lt), k, y)[1],
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    tau = float(np.exp(res.x)) if res.fun <= rmse[best] else float(grid[best])
    (m0, m_inf), err = _solve_at(tau, k, y)
    return SaturatingFit(m0=float(m0), m_inf=float(m_inf), tau=tau, residual_rmse=err)


def curvefit_forecast(prefix, horizon: int) -> Forecast:
    fit = fit_saturating_curve(prefix)
    start = len(prefix) + 1
    values = np.maximum(fit.predict(np.arange(start, start + horizon)), 0.0)
    return Forecast(start_epoch=start, values=values, method="curvefit")
