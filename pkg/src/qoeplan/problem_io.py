"""Problem files: model metas, trace or synthesis specs, weights and scales.

Relative paths inside a problem file resolve against the file's directory.
The name ``fixture`` refers to the bundled four-model problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .allocator import AllocationProblem, ModelEntry, extend_trace
from .curve import (
    DEFAULT_MAX_EPOCHS,
    ModelMeta,
    SynthCurveSpec,
    TrainingTrace,
    load_trace,
    synth_trace,
)
from .predictor import PredictorConfig
from .qoe import DEFAULT_SCALES, QoeScales, QoeWeights, load_weights_scales

FIXTURE = "fixture"


def data_path(name: str) -> Path:
    return Path(str(resources.files("qoeplan") / "data" / name))


def resolve_problem_path(path: str | Path) -> Path:
    if str(path) == FIXTURE:
        return data_path("fixture_problem.json")
    return Path(path)


class ProblemFileError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSource:
    """One ``models[]`` entry, before curves are materialized."""

    meta: ModelMeta
    trace_path: Path | None
    synth: dict | None
    observe: int | None
    weights_path: Path | None


def _curve_spec(block: dict, length: int, seed: int, where: str) -> SynthCurveSpec:
    try:
        noise = float(block.get("noise_sigma", 0.0))
        if "final" in block:
            return SynthCurveSpec.hitting(
                float(block["m0"]), float(block["final"]), float(block["tau"]), length,
                noise_sigma=noise, length=length, seed=seed,
            )
        return SynthCurveSpec(
            m0=float(block["m0"]), m_inf=float(block["m_inf"]), tau=float(block["tau"]),
            noise_sigma=noise, length=length, seed=seed,
        )
    except KeyError as exc:
        raise ProblemFileError(f"{where}: missing field {exc.args[0]!r}") from None
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemFileError(f"{where}: {exc}") from None


def synth_from_block(meta: ModelMeta, synth: dict, max_epochs: int) -> TrainingTrace:
    """Build a trace from a ``synth`` block with ``mae``/``mse``/``loss`` sub-specs."""
    length = int(synth.get("length", max_epochs))
    seed = int(synth.get("seed", 0))
    where = f"model {meta.name!r}"
    if "mae" not in synth:
        raise ProblemFileError(f"{where}: synth block needs an 'mae' spec")
    mae = _curve_spec(synth["mae"], length, seed, f"{where} mae")
    mse = _curve_spec(synth["mse"], length, seed + 1, f"{where} mse") if "mse" in synth else None
    loss = _curve_spec(synth["loss"], length, seed + 2, f"{where} loss") if "loss" in synth else None
    return synth_trace(mae, meta, mse_spec=mse, loss_spec=loss, max_epochs=max_epochs)


def read_problem_doc(path: str | Path) -> tuple[dict, Path]:
    path = resolve_problem_path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not doc.get("models"):
        raise ProblemFileError(f"{path}: 'models' must be a nonempty list")
    return doc, path.parent


def model_sources(doc: dict, root: Path) -> list[ModelSource]:
    sources = []
    for k, entry in enumerate(doc["models"]):
        if "meta" not in entry:
            raise ProblemFileError(f"models[{k}]: missing 'meta'")
        try:
            meta = ModelMeta.from_json(entry["meta"])
        except ValueError as exc:
            raise ProblemFileError(f"models[{k}]: {exc}") from None
        trace = entry.get("trace")
        synth = entry.get("synth")
        if trace is None and synth is None:
            raise ProblemFileError(f"model {meta.name!r}: needs a 'trace' path or a 'synth' block")
        sources.append(
            ModelSource(
                meta=meta,
                trace_path=root / trace if trace else None,
                synth=synth,
                observe=entry.get("observe"),
                weights_path=root / entry["weights"] if entry.get("weights") else None,
            )
        )
    return sources


def materialize_trace(src: ModelSource, max_epochs: int) -> TrainingTrace:
    if src.trace_path is not None:
        trace = load_trace(src.trace_path, meta=src.meta, max_epochs=max_epochs)
        if trace.meta is None:
            trace = TrainingTrace(src.meta, trace.records, trace.max_epochs)
    else:
        trace = synth_from_block(src.meta, src.synth, max_epochs)
    if src.observe is not None:
        trace = trace.truncated(int(src.observe))
    return trace


def _weights_from(path: Path) -> QoeWeights:
    weights, _ = load_weights_scales(path)
    if weights is None:
        raise ProblemFileError(f"{path}: no 'weights' object")
    return weights


def load_problem(
    path: str | Path,
    budget_hours: float | None = None,
    weights_path: str | Path | None = None,
    scales_path: str | Path | None = None,
    forecast_method: str | None = None,
    predictor_config: PredictorConfig | None = None,
) -> AllocationProblem:
    """Read a problem file into an :class:`AllocationProblem`.

    Explicit ``weights_path``/``scales_path`` override the file's own. The
    budget falls back to the file's ``budget_hours`` and then to infinity,
    which suits templates for sweeps.
    """
    doc, root = read_problem_doc(path)
    max_epochs = int(doc.get("max_epochs", DEFAULT_MAX_EPOCHS))
    method = forecast_method or doc.get("forecast_method", "lstm")

    default_weights = None
    if weights_path is not None:
        default_weights = _weights_from(Path(weights_path))
    elif doc.get("weights"):
        default_weights = _weights_from(root / doc["weights"])

    scales = DEFAULT_SCALES
    scales_file = Path(scales_path) if scales_path else (root / doc["scales"] if doc.get("scales") else None)
    if scales_file is not None:
        _, loaded = load_weights_scales(scales_file)
        if loaded is None:
            raise ProblemFileError(f"{scales_file}: no 'scales' object")
        scales = loaded

    entries = []
    for src in model_sources(doc, root):
        if weights_path is None and src.weights_path is not None:
            weights = _weights_from(src.weights_path)
        elif default_weights is not None:
            weights = default_weights
        else:
            raise ProblemFileError(f"model {src.meta.name!r}: no weights given")
        trace = materialize_trace(src, max_epochs)
        curve = extend_trace(trace, max_epochs, method, predictor_config)
        entries.append(ModelEntry(meta=src.meta, curve=curve, weights=weights, scales=scales))

    if budget_hours is None:
        budget_hours = float(doc.get("budget_hours", math.inf))
    return AllocationProblem(
        models=tuple(entries),
        budget_hours=float(budget_hours),
        base_epochs=int(doc.get("base_epochs", 500)),
        max_epochs=max_epochs,
        epoch_step=int(doc.get("epoch_step", 1)),
    )


def load_scales(path: str | Path | None) -> QoeScales:
    if path is None:
        return DEFAULT_SCALES
    _, scales = load_weights_scales(path)
    return scales or DEFAULT_SCALES
