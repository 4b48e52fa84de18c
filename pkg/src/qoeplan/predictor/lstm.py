"""Two-layer LSTM one-step-ahead forecaster written directly in numpy.

The network reads a window of normalized metric values and predicts the next
value. Multi-step forecasts roll the window forward on its own predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DivergedTraining, PrefixTooShort

NORM_STD_FLOOR = 1e-8
N_LAYERS = 2
# training runs in single precision for speed; stored weights and inference are float64
TRAIN_DTYPE = np.float32


@dataclass(frozen=True)
class PredictorConfig:
    window: int = 20
    hidden_size: int = 16
    layers: int = N_LAYERS
    dropout_rate: float = 0.1
    learning_rate: float = 1e-2
    train_iters: int = 800
    clip_norm: float = 1.0
    # cosine decay of the step size down to this fraction of learning_rate; 1 disables it
    final_lr_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.hidden_size < 1:
            raise ValueError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if self.layers != N_LAYERS:
            raise ValueError(f"the forecaster has exactly {N_LAYERS} recurrent layers")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.train_iters < 1:
            raise ValueError(f"train_iters must be >= 1, got {self.train_iters}")


@dataclass(frozen=True)
class Forecast:
    start_epoch: int
    values: np.ndarray
    method: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("forecast values must be finite and nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def epochs(self) -> np.ndarray:
        return np.arange(self.start_epoch, self.start_epoch + len(self.values))


# ---------------------------------------------------------------------------
# network maths


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_params(config: PredictorConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    H = config.hidden_size
    bound = 1.0 / math.sqrt(H)
    params = {}
    n_in = 1
    for layer in range(N_LAYERS):
        params[f"w_ih{layer}"] = rng.uniform(-bound, bound, (4 * H, n_in))
        params[f"w_hh{layer}"] = rng.uniform(-bound, bound, (4 * H, H))
        b = rng.uniform(-bound, bound, 4 * H)
        b[H : 2 * H] += 1.0  # forget-gate bias
        params[f"b{layer}"] = b
        n_in = H
    # last entry is the output bias
    params["w_out"] = rng.uniform(-bound, bound, H + 1)
    return params


def _layer_forward(w_ih, w_hh, b, xs):
    """Run one layer over ``xs`` shaped (time, feature, batch).

    Gate rows are ordered input, forget, output, candidate. Buffers are
    preallocated per call; ``hs[t + 1]`` and ``cs[t + 1]`` hold the state
    after step ``t``.
    """
    T, _, B = xs.shape
    H = w_hh.shape[1]
    gates = np.matmul(w_ih, xs)
    gates += b[:, None]
    hs = np.zeros((T + 1, H, B), dtype=gates.dtype)
    cs = np.zeros((T + 1, H, B), dtype=gates.dtype)
    tcs = np.empty((T, H, B), dtype=gates.dtype)
    ig = np.empty((H, B), dtype=gates.dtype)
    for t in range(T):
        z = gates[t]
        z += w_hh @ hs[t]
        sig = z[: 3 * H]
        sig *= 0.5
        np.tanh(sig, out=sig)
        sig += 1.0
        sig *= 0.5
        np.tanh(z[3 * H :], out=z[3 * H :])
        i, f, o, g = z[:H], z[H : 2 * H], z[2 * H : 3 * H], z[3 * H :]
        np.multiply(f, cs[t], out=cs[t + 1])
        np.multiply(i, g, out=ig)
        cs[t + 1] += ig
        np.tanh(cs[t + 1], out=tcs[t])
        np.multiply(o, tcs[t], out=hs[t + 1])
    return hs[1:], (gates, hs, cs, tcs)


def _layer_backward(w_ih, w_hh, xs, cache, dhs):
    gates, hs, cs, tcs = cache
    T, _, B = xs.shape
    H = w_hh.shape[1]
    dz_all = np.empty_like(gates)
    dw_hh = np.zeros_like(w_hh)
    dh = np.zeros((H, B), dtype=gates.dtype)
    dc = np.zeros((H, B), dtype=gates.dtype)
    tmp = np.empty((H, B), dtype=gates.dtype)
    for t in reversed(range(T)):
        z = gates[t]
        i, f, o, g = z[:H], z[H : 2 * H], z[2 * H : 3 * H], z[3 * H :]
        tc = tcs[t]
        dh += dhs[t]
        # dc += dh * o * (1 - tc^2)
        np.multiply(tc, tc, out=tmp)
        np.subtract(1.0, tmp, out=tmp)
        tmp *= o
        tmp *= dh
        dc += tmp
        dz = dz_all[t]
        np.multiply(dc, g, out=dz[:H])
        dz[:H] *= i
        np.subtract(1.0, i, out=tmp)
        dz[:H] *= tmp
        np.multiply(dc, cs[t], out=dz[H : 2 * H])
        dz[H : 2 * H] *= f
        np.subtract(1.0, f, out=tmp)
        dz[H : 2 * H] *= tmp
        np.multiply(dh, tc, out=dz[2 * H : 3 * H])
        dz[2 * H : 3 * H] *= o
        np.subtract(1.0, o, out=tmp)
        dz[2 * H : 3 * H] *= tmp
        np.multiply(g, g, out=tmp)
        np.subtract(1.0, tmp, out=tmp)
        tmp *= i
        np.multiply(dc, tmp, out=dz[3 * H :])
        dw_hh += dz @ hs[t].T
        np.matmul(w_hh.T, dz, out=dh)
        dc *= f
    # sum over time and batch of dz_t x_t^T
    dw_ih = np.tensordot(dz_all, xs, axes=([0, 2], [0, 2]))
    db = dz_all.sum(axis=(0, 2))
    dxs = np.matmul(w_ih.T, dz_all)
    return dw_ih, dw_hh, db, dxs


def forward(params, windows, masks=None):
    """Predict the next normalized value for each row of ``windows`` (B, T).

    ``masks`` is ``None`` (inference) or a pair of inverted-dropout masks
    shaped (T, H, B) for the inter-layer signal and (H, B) for the output
    features.
    """
    xs = np.ascontiguousarray(windows.T[:, None, :])
    hs0, steps0 = _layer_forward(params["w_ih0"], params["w_hh0"], params["b0"], xs)
    inp1 = hs0 if masks is None else hs0 * masks[0]
    hs1, steps1 = _layer_forward(params["w_ih1"], params["w_hh1"], params["b1"], inp1)
    h_last = hs1[-1]
    feat = np.maximum(h_last, 0.0)
    if masks is not None:
        feat = feat * masks[1]
    w_out = params["w_out"]
    # residual head: the network predicts the step from the last input value
    y = windows[:, -1] + (w_out[:-1] @ feat + w_out[-1])
    cache = (xs, steps0, inp1, steps1, h_last, feat, masks)
    return y, cache


def backward(params, cache, dy):
    xs, steps0, inp1, steps1, h_last, feat, masks = cache
    T = xs.shape[0]
    w_out = params["w_out"]
    grads = {"w_out": np.append(feat @ dy, dy.sum())}
    dfeat = np.outer(w_out[:-1], dy)
    if masks is not None:
        dfeat = dfeat * masks[1]
    dhs1 = np.zeros((T,) + h_last.shape, dtype=h_last.dtype)
    dhs1[-1] = dfeat * (h_last > 0)
    dw_ih1, dw_hh1, db1, dinp1 = _layer_backward(
        params["w_ih1"], params["w_hh1"], inp1, steps1, dhs1
    )
    dhs0 = dinp1 if masks is None else dinp1 * masks[0]
    dw_ih0, dw_hh0, db0, _ = _layer_backward(params["w_ih0"], params["w_hh0"], xs, steps0, dhs0)
    grads.update(
        w_ih0=dw_ih0, w_hh0=dw_hh0, b0=db0, w_ih1=dw_ih1, w_hh1=dw_hh1, b1=db1
    )
    return grads


def one_step_loss(params, windows, targets, masks=None):
    y, cache = forward(params, windows, masks)
    resid = y - targets
    return float(np.mean(resid * resid)), cache, resid


def loss_and_grads(params, windows, targets, masks=None):
    loss, cache, resid = one_step_loss(params, windows, targets, masks)
    grads = backward(params, cache, 2.0 * resid / len(targets))
    return loss, grads


def dropout_masks(rng, rate, batch, window, hidden, dtype=np.float64):
    if rate <= 0:
        return None
    keep = 1.0 - rate
    m0 = ((rng.random((window, hidden, batch)) < keep) / keep).astype(dtype)
    m1 = ((rng.random((hidden, batch)) < keep) / keep).astype(dtype)
    return m0, m1


def sliding_windows(series: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """All (window, next value) pairs of ``series``."""
    n = len(series) - window
    idx = np.arange(window)[None, :] + np.arange(n)[:, None]
    return series[idx], series[window:]


# ---------------------------------------------------------------------------
# public surface


@dataclass(frozen=True)
class SequencePredictor:
    config: PredictorConfig
    params: dict[str, np.ndarray]
    norm_mean: float
    norm_std: float
    train_rmse: float = float("nan")
    loss_history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.norm_std > 0:
            raise ValueError("normalization scale must be > 0")
        for name, arr in self.params.items():
            if not np.all(np.isfinite(arr)):
                raise DivergedTraining(f"non-finite weights in {name}")
            arr.flags.writeable = False

    def normalize(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.norm_mean) / self.norm_std

    def denormalize(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.norm_std + self.norm_mean

    def predict_next(self, windows) -> np.ndarray:
        """De-normalized one-step predictions for raw-valued windows (B, window)."""
        z = self.normalize(np.atleast_2d(windows))
        y, _ = forward(self.params, z)
        return self.denormalize(y)

    def to_json(self) -> dict:
        return {
            "window": self.config.window,
            "hidden_size": self.config.hidden_size,
            "layers": [
                {
                    "w_ih": self.params[f"w_ih{k}"].ravel().tolist(),
                    "w_hh": self.params[f"w_hh{k}"].ravel().tolist(),
                    "b": self.params[f"b{k}"].tolist(),
                }
                for k in range(N_LAYERS)
            ],
            "w_out": self.params["w_out"].tolist(),
            "norm_mean": self.norm_mean,
            "norm_std": self.norm_std,
            "train_rmse": self.train_rmse,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SequencePredictor":
        H = int(doc["hidden_size"])
        config = PredictorConfig(window=int(doc["window"]), hidden_size=H)
        params = {}
        n_in = 1
        for k, layer in enumerate(doc["layers"]):
            params[f"w_ih{k}"] = np.array(layer["w_ih"], dtype=float).reshape(4 * H, n_in)
            params[f"w_hh{k}"] = np.array(layer["w_hh"], dtype=float).reshape(4 * H, H)
            params[f"b{k}"] = np.array(layer["b"], dtype=float)
            n_in = H
        params["w_out"] = np.array(doc["w_out"], dtype=float)
        return cls(
            config=config,
            params=params,
            norm_mean=float(doc["norm_mean"]),
            norm_std=float(doc["norm_std"]),
            train_rmse=float(doc.get("train_rmse", float("nan"))),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SequencePredictor":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def normalization_stats(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), max(float(values.std()), NORM_STD_FLOOR)


def train_predictor(prefix, config: PredictorConfig = PredictorConfig()) -> SequencePredictor:
    """Fit the forecaster on one-step-ahead targets of ``prefix``.

    Full-batch Adam over every sliding window of the normalized prefix,
    with global gradient-norm clipping. Deterministic in ``config.seed``.
    """
    prefix = np.asarray(prefix, dtype=float)
    if len(prefix) < config.window + 1:
        raise PrefixTooShort(
            f"need at least window + 1 = {config.window + 1} values, got {len(prefix)}"
        )
    mean, std = normalization_stats(prefix)
    z = (prefix - mean) / std
    windows, targets = sliding_windows(z, config.window)
    windows32 = windows.astype(TRAIN_DTYPE)
    targets32 = targets.astype(TRAIN_DTYPE)

    rng = np.random.default_rng(config.seed)
    params = {k: v.astype(TRAIN_DTYPE) for k, v in init_params(config, rng).items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(val) for k, val in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    history = []
    for step in range(1, config.train_iters + 1):
        masks = dropout_masks(
            rng, config.dropout_rate, len(windows), config.window, config.hidden_size, TRAIN_DTYPE
        )
        loss, grads = loss_and_grads(params, windows32, targets32, masks)
        if not math.isfinite(loss):
            raise DivergedTraining(f"training loss became non-finite at step {step}")
        history.append(loss)
        gnorm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        scale = min(1.0, config.clip_norm / gnorm) if gnorm > 0 else 1.0
        anneal = 0.5 * (1 + math.cos(math.pi * (step - 1) / config.train_iters))
        frac = config.final_lr_fraction + (1 - config.final_lr_fraction) * anneal
        lr = config.learning_rate * frac * math.sqrt(1 - beta2**step) / (1 - beta1**step)
        for k in params:
            g = grads[k] * scale
            m[k] = beta1 * m[k] + (1 - beta1) * g
            v[k] = beta2 * v[k] + (1 - beta2) * g * g
            params[k] = params[k] - lr * m[k] / (np.sqrt(v[k]) + eps)

    params = {k: p.astype(np.float64) for k, p in params.items()}
    final_loss, _, _ = one_step_loss(params, windows, targets)
    if not math.isfinite(final_loss):
        raise DivergedTraining("final training loss is non-finite")
    return SequencePredictor(
        config=config,
        params=params,
        norm_mean=mean,
        norm_std=std,
        train_rmse=math.sqrt(final_loss),
        loss_history=tuple(history),
    )


def forecast(predictor: SequencePredictor, prefix, horizon: int) -> Forecast:
    """Closed-loop rollout of ``horizon`` values after the end of ``prefix``."""
    prefix = np.asarray(prefix, dtype=float)
    window = predictor.config.window
    if len(prefix) < window:
        raise PrefixTooShort(f"need at least {window} values, got {len(prefix)}")
    if horizon < 1:
        raise ValueError(f"horizon must be positive, got {horizon}")
    buf = list(predictor.normalize(prefix[-window:]))
    out = np.empty(horizon)
    for k in range(horizon):
        y, _ = forward(predictor.params, np.array([buf[-window:]]))
        out[k] = y[0]
        buf.append(y[0])
    values = np.maximum(predictor.denormalize(out), 0.0)
    return Forecast(start_epoch=len(prefix) + 1, values=values, method="lstm")


def gradient_check(config: PredictorConfig, probe, step: float = 1e-5) -> float:
    """Largest relative error between backprop and central-difference gradients.

    Weights are drawn from ``config.seed``; the probe's sliding windows are
    used as-is as network inputs. When dropout is on, one fixed mask pair is
    drawn so the masked path is checked as well. The error of each weight
    tensor is ``|analytic - numeric| / max(|analytic|, |numeric|)`` in the
    Euclidean norm; the maximum over tensors is returned.
    """
    probe = np.asarray(probe, dtype=float)
    if len(probe) < config.window + 1:
        raise PrefixTooShort(f"probe needs at least {config.window + 1} values")
    windows, targets = sliding_windows(probe, config.window)
    rng = np.random.default_rng(config.seed)
    params = init_params(config, rng)
    masks = dropout_masks(rng, config.dropout_rate, len(windows), config.window, config.hidden_size)
    _, analytic = loss_and_grads(params, windows, targets, masks)

    worst = 0.0
    for name, arr in params.items():
        numeric = np.zeros_like(arr)
        flat = arr.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = one_step_loss(params, windows, targets, masks)[0]
            flat[j] = orig - step
            down = one_step_loss(params, windows, targets, masks)[0]
            flat[j] = orig
            num_flat[j] = (up - down) / (2 * step)
        a = analytic[name]
        denom = max(np.linalg.norm(a), np.linalg.norm(numeric))
        if denom == 0:
            continue
        worst = max(worst, float(np.linalg.norm(a - numeric) / denom))
    return worst


def analytic_gradients(config: PredictorConfig, probe) -> dict[str, np.ndarray]:
    """Backprop gradients of the one-step loss on ``probe`` at seeded weights, no dropout."""
    windows, targets = sliding_windows(np.asarray(probe, dtype=float), config.window)
    params = init_params(config, np.random.default_rng(config.seed))
    return loss_and_grads(params, windows, targets)[1]
