"""The gesture classifier: conv stack, self-attention, LSTM, linear head.

Layer order on a (B, 2, 100) window batch:

    conv1..conv4 (ReLU each)   -> (B, 100, 22)   time axis shrinks 100->22
    transpose                  -> (B, 22, 100)
    self-attention (20 heads)  -> (B, 22, 100)
    fc_time + ReLU             -> (B, 22, 100)
    lstm (all hidden states)   -> (B, 22, 100)
    flatten                    -> (B, 2200)
    fc_flat + ReLU             -> (B, 100)
    fc_out                     -> (B, 5) logits

Convolutions are unpadded; with kernel 3 and strides (1, 2, 1, 2) the time
lengths chain 100 -> 98 -> 48 -> 46 -> 22, so the flattened LSTM output is
22 * 100 = 2200 wide.  Input windows are AC-coupled (mean-centered per
channel, discarding the per-subject impedance baseline) and scaled by
per-channel statistics frozen at training time and stored with the weights.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    ConfigMismatchError,
    FormatVersionMismatchError,
    ShapeMismatchError,
)
from .layers import LSTM, Conv1d, Linear, MultiHeadSelfAttention, relu, relu_backward

WEIGHTS_MAGIC = b"BCNW"
WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; defaults are the production network."""

    in_channels: int = 2
    window: int = 100
    conv_channels: int = 100
    kernel_size: int = 3
    conv_strides: tuple[int, ...] = (1, 2, 1, 2)
    attn_heads: int = 20
    lstm_hidden: int = 100
    n_classes: int = 5

    def __post_init__(self) -> None:
        if self.conv_channels % self.attn_heads != 0:
            raise ValueError("attn_heads must divide conv_channels")
        if self.post_conv_length < 1:
            raise ValueError("window too short for the conv stack")

    def conv_lengths(self) -> list[int]:
        """Time-axis lengths after each conv layer."""
        lengths = [self.window]
        for stride in self.conv_strides:
            lengths.append((lengths[-1] - self.kernel_size) // stride + 1)
        return lengths[1:]

    @property
    def post_conv_length(self) -> int:
        length = self.window
        for stride in self.conv_strides:
            length = (length - self.kernel_size) // stride + 1
        return length

    @property
    def flatten_width(self) -> int:
        return self.post_conv_length * self.lstm_hidden

    @classmethod
    def reduced(cls, window: int = 20, channels: int = 8, heads: int = 2,
                hidden: int = 8) -> "ModelConfig":
        """Small configuration for tests and gradient checks."""
        return cls(window=window, conv_channels=channels, attn_heads=heads,
                   lstm_hidden=hidden)


@dataclass
class Model:
    """Classifier parameters plus input standardization and training metadata."""

    config: ModelConfig
    seed: int = 0
    input_mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    input_std: np.ndarray = field(default=None)  # type: ignore[assignment]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        cfg = self.config
        rng = np.random.default_rng(self.seed)
        self.convs = []
        channels = cfg.in_channels
        for stride in cfg.conv_strides:
            self.convs.append(
                Conv1d(channels, cfg.conv_channels, cfg.kernel_size, stride, rng)
            )
            channels = cfg.conv_channels
        self.attn = MultiHeadSelfAttention(cfg.conv_channels, cfg.attn_heads, rng)
        self.fc_time = Linear(cfg.conv_channels, cfg.conv_channels, rng)
        self.lstm = LSTM(cfg.conv_channels, cfg.lstm_hidden, rng)
        self.fc_flat = Linear(cfg.flatten_width, cfg.conv_channels, rng)
        self.fc_out = Linear(cfg.conv_channels, cfg.n_classes, rng)
        if self.input_mean is None:
            self.input_mean = np.zeros(cfg.in_channels)
        if self.input_std is None:
            self.input_std = np.ones(cfg.in_channels)

    def _named_layers(self) -> list[tuple[str, object]]:
        layers = [(f"conv{i + 1}", c) for i, c in enumerate(self.convs)]
        layers += [
            ("attn", self.attn),
            ("fc_time", self.fc_time),
            ("lstm", self.lstm),
            ("fc_flat", self.fc_flat),
            ("fc_out", self.fc_out),
        ]
        return layers

    def parameters(self) -> dict[str, np.ndarray]:
        """Flat name -> array view of every trainable tensor."""
        out = {}
        for lname, layer in self._named_layers():
            for pname, arr in layer.params.items():
                out[f"{lname}.{pname}"] = arr
        return out

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise ConfigMismatchError("parameter names do not match this model")
        for name, arr in values.items():
            if params[name].shape != arr.shape:
                raise ConfigMismatchError(
                    f"parameter {name} has shape {arr.shape}, expected {params[name].shape}"
                )
            params[name][...] = arr

    def set_standardizer(self, mean: np.ndarray, std: np.ndarray) -> None:
        self.input_mean = np.asarray(mean, dtype=np.float64)
        self.input_std = np.maximum(np.asarray(std, dtype=np.float64), 1e-8)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        cfg = self.config
        if x.ndim != 3 or x.shape[1:] != (cfg.in_channels, cfg.window):
            raise ShapeMismatchError(
                f"expected (B, {cfg.in_channels}, {cfg.window}) input, got {x.shape}"
            )
        # AC-couple every window: the absolute impedance level is a per-subject
        # nuisance; only the within-window deviation carries gesture shape.
        x = x - x.mean(axis=2, keepdims=True)
        return (x - self.input_mean[:, None]) / self.input_std[:, None]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits (B, n_classes) for a window batch (B, channels, window)."""
        logits, _ = self._forward_full(x)
        return logits

    def _forward_full(self, x: np.ndarray):
        x = self._check_input(x)
        caches = []
        h = x
        for conv in self.convs:
            h, c = conv.forward(h)
            h, mask = relu(h)
            caches.append((c, mask))
        h = h.transpose(0, 2, 1)  # (B, T, C)
        h, attn_cache = self.attn.forward(h)
        h, fc_time_cache = self.fc_time.forward(h)
        h, fc_time_mask = relu(h)
        h, lstm_cache = self.lstm.forward(h)
        b = h.shape[0]
        flat = h.reshape(b, -1)
        h2, fc_flat_cache = self.fc_flat.forward(flat)
        h2, fc_flat_mask = relu(h2)
        logits, fc_out_cache = self.fc_out.forward(h2)
        cache = (
            caches, attn_cache, fc_time_cache, fc_time_mask,
            lstm_cache, fc_flat_cache, fc_flat_mask, fc_out_cache,
        )
        return logits, cache

    def backward(self, dlogits: np.ndarray, cache) -> dict[str, np.ndarray]:
        """Gradients for every parameter given dLoss/dlogits."""
        (conv_caches, attn_cache, fc_time_cache, fc_time_mask,
         lstm_cache, fc_flat_cache, fc_flat_mask, fc_out_cache) = cache
        grads: dict[str, np.ndarray] = {}

        dh, g = self.fc_out.backward(dlogits, fc_out_cache)
        _store(grads, "fc_out", g)
        dh = relu_backward(dh, fc_flat_mask)
        dflat, g = self.fc_flat.backward(dh, fc_flat_cache)
        _store(grads, "fc_flat", g)

        b = dflat.shape[0]
        dh = dflat.reshape(b, self.config.post_conv_length, self.config.lstm_hidden)
        dh, g = self.lstm.backward(dh, lstm_cache)
        _store(grads, "lstm", g)
        dh = relu_backward(dh, fc_time_mask)
        dh, g = self.fc_time.backward(dh, fc_time_cache)
        _store(grads, "fc_time", g)
        dh, g = self.attn.backward(dh, attn_cache)
        _store(grads, "attn", g)

        dh = dh.transpose(0, 2, 1)  # back to (B, C, T)
        for i in reversed(range(len(self.convs))):
            conv_cache, mask = conv_caches[i]
            dh = relu_backward(dh, mask)
            dh, g = self.convs[i].backward(dh, conv_cache)
            _store(grads, f"conv{i + 1}", g)
        return grads


def _store(grads: dict, prefix: str, layer_grads: dict) -> None:
    for name, arr in layer_grads.items():
        grads[f"{prefix}.{name}"] = arr


def save_weights(model: Model, path: str | Path) -> None:
    """Persist a model: versioned header, config, standardizer, tensors.

    Tensor data is little-endian float64, written in the deterministic
    order of :meth:`Model.parameters`.
    """
    params = model.parameters()
    header = {
        "config": _config_dict(model.config),
        "seed": model.seed,
        "input_mean": model.input_mean.tolist(),
        "input_std": model.input_std.tolist(),
        "meta": model.meta,
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in params.items()],
    }
    blob = json.dumps(header).encode()
    with Path(path).open("wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", WEIGHTS_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in params.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_weights(path: str | Path, expected_config: ModelConfig | None = None) -> Model:
    """Load a model saved by :func:`save_weights`.

    Raises
    ------
    FormatVersionMismatchError
        On a bad magic number, version, or truncated file.
    ConfigMismatchError
        If ``expected_config`` is given and differs from the stored one.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != WEIGHTS_MAGIC:
        raise FormatVersionMismatchError(f"{path} is not a weights file")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != WEIGHTS_VERSION:
        raise FormatVersionMismatchError(
            f"weights version {version} unsupported (expected {WEIGHTS_VERSION})"
        )
    (header_len,) = struct.unpack("<Q", raw[8:16])
    if len(raw) < 16 + header_len:
        raise FormatVersionMismatchError(f"{path} is truncated inside the header")
    header = json.loads(raw[16 : 16 + header_len])
    config = ModelConfig(
        **{**header["config"], "conv_strides": tuple(header["config"]["conv_strides"])}
    )
    if expected_config is not None and config != expected_config:
        raise ConfigMismatchError(
            f"stored config {config} does not match expected {expected_config}"
        )

    offset = 16 + header_len
    tensors = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape)) * 8
        chunk = raw[offset : offset + nbytes]
        if len(chunk) < nbytes:
            raise FormatVersionMismatchError(f"{path} is truncated inside tensor data")
        tensors[spec["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes

    model = Model(config=config, seed=header.get("seed", 0), meta=header.get("meta", {}))
    model.set_parameters(tensors)
    model.set_standardizer(
        np.array(header["input_mean"]), np.array(header["input_std"])
    )
    return model


def _config_dict(config: ModelConfig) -> dict:
    d = asdict(config)
    d["conv_strides"] = list(d["conv_strides"])
    return d
