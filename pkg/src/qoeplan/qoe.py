"""Experience factors and their weighted aggregation.

Every factor maps a raw quantity (an error metric or a duration) onto
``(0, 1]`` with ``exp(-max(0, value - v0) / s)``: full marks up to the
reference value ``v0``, then exponential decay with tolerance width ``s``.
Factor order everywhere is ``(mae, mse, train, load, test)``.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .curve import DEFAULT_MAX_EPOCHS, ModelMeta, best_so_far, epoch_to_time
from .errors import NonpositiveScale, WeightsNotNormalized

FACTORS = ("mae", "mse", "train", "load", "test")
WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class QoeWeights:
    w_mae: float
    w_mse: float
    w_train: float
    w_load: float
    w_test: float

    def __post_init__(self):
        values = astuple(self)
        if any(not w >= 0 for w in values):
            raise WeightsNotNormalized(f"weights must be nonnegative, got {values}")
        total = math.fsum(values)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise WeightsNotNormalized(f"weights must sum to 1, got {total!r}")

    @classmethod
    def from_sequence(cls, values) -> "QoeWeights":
        values = [float(v) for v in values]
        if len(values) != 5:
            raise ValueError(f"expected 5 weights (mae, mse, train, load, test), got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def to_json(self) -> dict:
        return dict(zip(FACTORS, astuple(self)))

    @classmethod
    def from_json(cls, obj: dict) -> "QoeWeights":
        return cls(*(float(obj[name]) for name in FACTORS))


# Weight vectors used for the expected-weight comparison on a single model.
W1 = QoeWeights(0.1, 0.1, 0.5, 0.05, 0.25)
W2 = QoeWeights(0.4, 0.4, 0.05, 0.03, 0.12)
W3 = QoeWeights(0.3, 0.4, 0.01, 0.2, 0.09)


@dataclass(frozen=True)
class FactorScale:
    v0: float
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise NonpositiveScale(f"scale s must be > 0, got {self.s}")
        if not self.v0 >= 0:
            raise ValueError(f"reference v0 must be >= 0, got {self.v0}")


@dataclass(frozen=True)
class QoeScales:
    """Reference value and tolerance width for each factor.

    Units: MAE/MSE in metric units, ``train`` in hours, ``load`` and
    ``test`` in seconds.
    """

    mae: FactorScale
    mse: FactorScale
    train: FactorScale
    load: FactorScale
    test: FactorScale

    def scaled(self, k: float) -> "QoeScales":
        """Every tolerance width multiplied by ``k``."""
        return QoeScales(*(FactorScale(f.v0, f.s * k) for f in self))

    def __iter__(self):
        return (getattr(self, f.name) for f in fields(self))

    def to_json(self) -> dict:
        return {name: {"v0": sc.v0, "s": sc.s} for name, sc in zip(FACTORS, self)}

    @classmethod
    def from_json(cls, obj: dict) -> "QoeScales":
        return cls(*(FactorScale(float(obj[n]["v0"]), float(obj[n]["s"])) for n in FACTORS))


# Artifact defaults, chosen for this package.
DEFAULT_SCALES = QoeScales(
    mae=FactorScale(80.0, 50.0),
    mse=FactorScale(150.0, 100.0),
    train=FactorScale(10.0, 20.0),
    load=FactorScale(10.0, 20.0),
    test=FactorScale(0.1, 0.5),
)


@dataclass(frozen=True)
class FactorVector:
    e_mae: float
    e_mse: float
    e_train: float
    e_load: float
    e_test: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0 < v <= 1:
                raise ValueError(f"{f.name} must lie in (0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def factor_experience(value: float, v0: float, s: float) -> float:
    """``exp(-max(0, value - v0) / s)``, floored at the smallest normal float."""
    if not s > 0:
        raise NonpositiveScale(f"scale s must be > 0, got {s}")
    # exp underflows to 0.0 past ~745 widths; the factor must stay positive
    return max(math.exp(-max(0.0, value - v0) / s), sys.float_info.min)


def total_experience(factors: FactorVector, weights: QoeWeights) -> float:
    if not isinstance(weights, QoeWeights):
        weights = QoeWeights.from_sequence(weights)
    return math.fsum(w * e for w, e in zip(astuple(weights), astuple(factors)))


def raw_values(source, meta: ModelMeta, epochs: int, max_epochs: int = DEFAULT_MAX_EPOCHS):
    """Raw (mae, mse, train hours, load s, test s) for a run stopped at ``epochs``."""
    return (
        best_so_far(source, epochs, "mae"),
        best_so_far(source, epochs, "mse"),
        epoch_to_time(meta, epochs, max_epochs),
        meta.t_load,
        meta.t_test,
    )


def factors_for(raw, scales: QoeScales) -> FactorVector:
    return FactorVector(*(factor_experience(v, sc.v0, sc.s) for v, sc in zip(raw, scales)))


def model_experience(
    source,
    meta: ModelMeta,
    epochs: int,
    weights: QoeWeights,
    scales: QoeScales = DEFAULT_SCALES,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> tuple[FactorVector, float]:
    """Factors and total experience of a model trained for ``epochs`` epochs.

    ``source`` provides per-epoch ``mae``/``mse`` arrays (observed or
    forecast) covering at least ``epochs`` epochs; the best checkpoint so far
    is what counts.
    """
    factors = factors_for(raw_values(source, meta, epochs, max_epochs), scales)
    return factors, total_experience(factors, weights)


def experience_curve(
    source,
    meta: ModelMeta,
    weights: QoeWeights,
    scales: QoeScales = DEFAULT_SCALES,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    epochs=None,
) -> np.ndarray:
    """Total experience at each epoch count in ``epochs`` (default 1..available)."""
    if epochs is None:
        epochs = range(1, min(len(source.mae), max_epochs) + 1)
    return np.array(
        [model_experience(source, meta, int(e), weights, scales, max_epochs)[1] for e in epochs]
    )


def load_weights_scales(path: str | Path) -> tuple[QoeWeights | None, QoeScales | None]:
    """Read a ``{"weights": ..., "scales": ...}`` document; either key may be absent."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = QoeWeights.from_json(obj["weights"]) if "weights" in obj else None
    scales = QoeScales.from_json(obj["scales"]) if "scales" in obj else None
    return weights, scales


def dump_weights_scales(weights: QoeWeights | None = None, scales: QoeScales | None = None) -> str:
    doc = {}
    if weights is not None:
        doc["weights"] = weights.to_json()
    if scales is not None:
        doc["scales"] = scales.to_json()
    return json.dumps(doc, indent=2) + "\n"
