"""Per-epoch training traces: data model, file I/O, synthesis and time mapping."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyTrace,
    EpochOutOfRange,
    MissingColumn,
    NegativeValue,
    NonContiguousEpochs,
    TraceError,
)

DEFAULT_MAX_EPOCHS = 1000
CSV_COLUMNS = ("epoch", "loss", "mae", "mse")
METRICS = ("loss", "mae", "mse")

# Companion curves derived from an MAE spec when none are given explicitly.
MSE_TO_MAE_RATIO = 1.75


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    mae: float
    mse: float

    def __post_init__(self):
        if self.epoch < 1:
            raise EpochOutOfRange(f"epoch must be >= 1, got {self.epoch}")
        for name in METRICS:
            value = getattr(self, name)
            if not value >= 0:
                raise NegativeValue(f"epoch {self.epoch}: column '{name}' is negative ({value})")


@dataclass(frozen=True)
class ModelMeta:
    """Static per-model facts: full-run training time, load time and test time.

    ``total_train_hours_at_max`` is the wall-clock time of a full run of
    ``max_epochs`` epochs; ``t_load``/``t_test`` are in seconds.
    """

    name: str
    total_train_hours_at_max: float
    t_load: float = 0.0
    t_test: float = 0.0
    model_size_mb: float = 0.0

    def __post_init__(self):
        if not self.total_train_hours_at_max > 0:
            raise ValueError(
                f"{self.name}: total_train_hours_at_max must be > 0, "
                f"got {self.total_train_hours_at_max}"
            )
        if self.t_load < 0 or self.t_test < 0:
            raise ValueError(f"{self.name}: t_load and t_test must be >= 0")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "total_train_hours_at_max": self.total_train_hours_at_max,
            "t_load_s": self.t_load,
            "t_test_s": self.t_test,
            "model_size_mb": self.model_size_mb,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelMeta":
        try:
            return cls(
                name=str(obj["name"]),
                total_train_hours_at_max=float(obj["total_train_hours_at_max"]),
                t_load=float(obj.get("t_load_s", 0.0)),
                t_test=float(obj.get("t_test_s", 0.0)),
                model_size_mb=float(obj.get("model_size_mb", 0.0)),
            )
        except KeyError as exc:
            raise MissingColumn(f"model meta is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class TrainingTrace:
    """Ordered per-epoch records of one training run.

    ``meta`` may be ``None`` for traces read from CSV, which carries no
    model metadata.
    """

    meta: ModelMeta | None
    records: tuple[EpochRecord, ...]
    max_epochs: int = DEFAULT_MAX_EPOCHS

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise EmptyTrace("trace has no records")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be positive, got {self.max_epochs}")
        if len(self.records) > self.max_epochs:
            raise EpochOutOfRange(
                f"trace has {len(self.records)} records but max_epochs is {self.max_epochs}"
            )
        for i, rec in enumerate(self.records, start=1):
            if rec.epoch != i:
                raise NonContiguousEpochs(f"row {i}: expected epoch {i}, found {rec.epoch}")

    def __len__(self) -> int:
        return len(self.records)

    def _column(self, name: str) -> np.ndarray:
        arr = np.array([getattr(r, name) for r in self.records], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def loss(self) -> np.ndarray:
        return self._column("loss")

    @cached_property
    def mae(self) -> np.ndarray:
        return self._column("mae")

    @cached_property
    def mse(self) -> np.ndarray:
        return self._column("mse")

    def truncated(self, epochs: int) -> "TrainingTrace":
        """The first ``epochs`` records, as if training had stopped there."""
        if not 1 <= epochs <= len(self):
            raise EpochOutOfRange(f"cannot truncate a {len(self)}-epoch trace to {epochs}")
        return replace(self, records=self.records[:epochs])

    @classmethod
    def from_arrays(
        cls,
        loss: Sequence[float],
        mae: Sequence[float],
        mse: Sequence[float],
        meta: ModelMeta | None = None,
        max_epochs: int = DEFAULT_MAX_EPOCHS,
    ) -> "TrainingTrace":
        if not len(loss) == len(mae) == len(mse):
            raise TraceError("loss, mae and mse must have equal length")
        records = tuple(
            EpochRecord(i + 1, float(lo), float(a), float(s))
            for i, (lo, a, s) in enumerate(zip(loss, mae, mse))
        )
        return cls(meta=meta, records=records, max_epochs=max_epochs)


@dataclass(frozen=True)
class SynthCurveSpec:
    """Saturating exponential ``m_inf + (m0 - m_inf) * exp(-k / tau)`` plus noise."""

    m0: float
    m_inf: float
    tau: float
    noise_sigma: float = 0.0
    length: int = DEFAULT_MAX_EPOCHS
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.m0 >= self.m_inf >= 0:
            raise ValueError(f"need m0 >= m_inf >= 0, got m0={self.m0}, m_inf={self.m_inf}")

    def values(self) -> np.ndarray:
        k = np.arange(1, self.length + 1, dtype=float)
        clean = self.m_inf + (self.m0 - self.m_inf) * np.exp(-k / self.tau)
        if self.noise_sigma > 0:
            rng = np.random.default_rng(self.seed)
            clean = clean + rng.normal(0.0, self.noise_sigma, self.length)
        return np.maximum(clean, 0.0)

    @classmethod
    def hitting(
        cls, m0: float, final: float, tau: float, at_epoch: int, **kwargs
    ) -> "SynthCurveSpec":
        """Spec whose noiseless curve passes through ``final`` at ``at_epoch``."""
        decay = math.exp(-at_epoch / tau)
        m_inf = (final - m0 * decay) / (1.0 - decay)
        return cls(m0=m0, m_inf=m_inf, tau=tau, **kwargs)


def _companion(spec: SynthCurveSpec, scale: float, seed_offset: int) -> SynthCurveSpec:
    return replace(
        spec,
        m0=spec.m0 * scale,
        m_inf=spec.m_inf * scale,
        noise_sigma=spec.noise_sigma * scale,
        seed=spec.seed + seed_offset,
    )


def synth_trace(
    spec: SynthCurveSpec,
    meta: ModelMeta | None,
    mse_spec: SynthCurveSpec | None = None,
    loss_spec: SynthCurveSpec | None = None,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> TrainingTrace:
    """Generate a trace whose MAE follows ``spec``.

    Without explicit companions, MSE is the MAE curve scaled by
    ``MSE_TO_MAE_RATIO`` and loss is the MAE curve scaled to start at 1,
    each with its own noise stream.
    """
    if mse_spec is None:
        mse_spec = _companion(spec, MSE_TO_MAE_RATIO, 1)
    if loss_spec is None:
        loss_spec = _companion(spec, 1.0 / spec.m0 if spec.m0 > 0 else 1.0, 2)
    if not spec.length == mse_spec.length == loss_spec.length:
        raise ValueError("mae, mse and loss specs must share the same length")
    return TrainingTrace.from_arrays(
        loss=loss_spec.values(),
        mae=spec.values(),
        mse=mse_spec.values(),
        meta=meta,
        max_epochs=max_epochs,
    )


def epoch_to_time(meta: ModelMeta, epochs: int, max_epochs: int = DEFAULT_MAX_EPOCHS) -> float:
    """Training hours for ``epochs`` epochs at a constant per-epoch cost."""
    if epochs < 0 or epochs > max_epochs:
        raise EpochOutOfRange(f"{meta.name}: epochs {epochs} outside [0, {max_epochs}]")
    # multiply first so full runs reproduce the reference hours exactly
    return meta.total_train_hours_at_max * epochs / max_epochs


def running_best(values: Iterable[float]) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def best_so_far(trace, epoch: int, metric: str = "mae") -> float:
    """Best (lowest) value of ``metric`` over epochs ``1..epoch``.

    ``trace`` is anything exposing per-epoch ``mae``/``mse`` arrays: a
    :class:`TrainingTrace` or a forecast-extended curve.
    """
    if metric not in ("mae", "mse"):
        raise ValueError(f"metric must be 'mae' or 'mse', got {metric!r}")
    series = getattr(trace, metric)
    if not 1 <= epoch <= len(series):
        raise EpochOutOfRange(f"epoch {epoch} outside [1, {len(series)}]")
    return float(np.min(series[:epoch]))


# ---------------------------------------------------------------------------
# file formats


def _parse_number(raw: str, row: int, column: str, integer: bool = False):
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise TraceError(f"row {row}: column '{column}' is not a number ({raw!r})") from None
    if integer:
        if not value.is_integer():
            raise TraceError(f"row {row}: column '{column}' is not an integer ({raw!r})")
        return int(value)
    return value


def _records_from_rows(rows: list[dict], source: str) -> list[EpochRecord]:
    if not rows:
        raise EmptyTrace(f"{source}: no records")
    parsed = []
    for row_no, row in enumerate(rows, start=1):
        for col in CSV_COLUMNS:
            if col not in row or row[col] is None or row[col] == "":
                raise MissingColumn(f"{source}: row {row_no} is missing column '{col}'")
        epoch = _parse_number(row["epoch"], row_no, "epoch", integer=True)
        values = {}
        for col in METRICS:
            v = _parse_number(row[col], row_no, col)
            if not v >= 0:
                raise NegativeValue(f"{source}: row {row_no}: column '{col}' is negative ({v})")
            values[col] = v
        parsed.append((epoch, row_no, values))

    parsed.sort(key=lambda item: item[0])
    records = []
    for expected, (epoch, row_no, values) in enumerate(parsed, start=1):
        if epoch != expected:
            raise NonContiguousEpochs(
                f"{source}: row {row_no}: expected epoch {expected}, found {epoch}"
            )
        records.append(EpochRecord(epoch, values["loss"], values["mae"], values["mse"]))
    return records


def parse_trace_csv(
    text: str,
    meta: ModelMeta | None = None,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    source: str = "<csv>",
) -> TrainingTrace:
    if not text.strip():
        raise EmptyTrace(f"{source}: empty file")
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for col in CSV_COLUMNS:
        if col not in header:
            raise MissingColumn(f"{source}: header lacks column '{col}'")
    records = _records_from_rows(list(reader), source)
    return TrainingTrace(meta=meta, records=tuple(records), max_epochs=max_epochs)


def parse_trace_json(text: str, source: str = "<json>") -> TrainingTrace:
    if not text.strip():
        raise EmptyTrace(f"{source}: empty file")
    obj = json.loads(text)
    if "records" not in obj:
        raise MissingColumn(f"{source}: document lacks 'records'")
    meta = ModelMeta.from_json(obj["meta"]) if obj.get("meta") else None
    rows = [{k: (None if v is None else str(v)) for k, v in r.items()} for r in obj["records"]]
    records = _records_from_rows(rows, source)
    max_epochs = int(obj.get("max_epochs", DEFAULT_MAX_EPOCHS))
    return TrainingTrace(meta=meta, records=tuple(records), max_epochs=max_epochs)


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown trace format {fmt!r} for {path}")
    return fmt


def load_trace(
    path: str | Path,
    fmt: str | None = None,
    meta: ModelMeta | None = None,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> TrainingTrace:
    """Read a trace from CSV or JSON; the format defaults to the file suffix.

    ``meta``/``max_epochs`` apply to CSV only; JSON documents carry their own.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    text = path.read_text(encoding="utf-8")
    if fmt == "csv":
        return parse_trace_csv(text, meta=meta, max_epochs=max_epochs, source=str(path))
    return parse_trace_json(text, source=str(path))


def trace_to_csv(trace: TrainingTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in trace.records:
        writer.writerow([r.epoch, repr(r.loss), repr(r.mae), repr(r.mse)])
    return buf.getvalue()


def trace_to_json(trace: TrainingTrace) -> str:
    doc = {
        "meta": trace.meta.to_json() if trace.meta is not None else None,
        "max_epochs": trace.max_epochs,
        "records": [asdict(r) for r in trace.records],
    }
    return json.dumps(doc, indent=1) + "\n"


def save_trace(trace: TrainingTrace, path: str | Path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    text = trace_to_csv(trace) if fmt == "csv" else trace_to_json(trace)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
