"""Training-curve forecasting: recurrent network and parametric curve fit."""

import numpy as np

from .curvefit import SaturatingFit, curvefit_forecast, fit_saturating_curve
from .lstm import (
    Forecast,
    PredictorConfig,
    SequencePredictor,
    analytic_gradients,
    forecast,
    gradient_check,
    train_predictor,
)

FORECAST_METHODS = ("lstm", "curvefit")


def forecast_tail(prefix, horizon: int, method: str = "lstm", config: PredictorConfig | None = None) -> Forecast:
    """Train (or fit) on ``prefix`` and forecast the next ``horizon`` values."""
    if method == "lstm":
        predictor = train_predictor(prefix, config or PredictorConfig())
        return forecast(predictor, prefix, horizon)
    if method == "curvefit":
        return curvefit_forecast(prefix, horizon)
    raise ValueError(f"unknown forecast method {method!r}; expected one of {FORECAST_METHODS}")


def mape(predicted, actual) -> float:
    """Mean absolute percentage error, in percent."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    return float(np.mean(np.abs(predicted - actual) / np.abs(actual)) * 100.0)


__all__ = [
    "FORECAST_METHODS",
    "Forecast",
    "PredictorConfig",
    "SaturatingFit",
    "SequencePredictor",
    "analytic_gradients",
    "curvefit_forecast",
    "fit_saturating_curve",
    "forecast",
    "forecast_tail",
    "gradient_check",
    "mape",
    "train_predictor",
]
