"""The three model families.

* :class:`AttributePredictor` -- MLP that approximates the (expensive)
  meta-attribute extraction from the raw series.
* :class:`Denoiser` -- 1-D U-Net shared by the autoencoder ("dae") and
  diffusion ("dpm") objectives: 4 stride-2 downsampling blocks (3 when the
  series has 64 points), 2 middle blocks and 4 upsampling blocks with skip
  concatenation.  Every block injects a timestep embedding by addition and an
  attribute embedding by channel concatenation, then applies two residual
  blocks.  The unconditional variant feeds a zero attribute embedding through
  the same parameter set, so conditioning never changes the parameter count.
* :class:`DownstreamModel` -- multi-scale CNN (parallel kernels 3/5/7) for
  the classification or regression task trained on augmented data.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from tsdaug.attributes import N_ATTRIBUTES
from tsdaug.data import SEGMENT_LEN
from tsdaug.engine import (
    ParamSet,
    Tensor,
    add,
    broadcast_length,
    concat_channels,
    conv1d,
    dense,
    flatten,
    glorot_uniform,
    load_checkpoint,
    maxpool1d,
    relu,
    save_checkpoint,
    tanh,
    upsample_nearest,
)
from tsdaug.errors import ConfigError

MIN_BOTTLENECK = 8


def sinusoidal_embedding(t: float, dim: int) -> np.ndarray:
    """Fixed sin/cos position code for a (scalar) timestep."""
    if dim % 2 != 0:
        raise ConfigError("embedding dimension must be even")
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    emb = np.empty(dim)
    emb[0::2] = np.sin(t * freqs)
    emb[1::2] = np.cos(t * freqs)
    return emb


def _np_dtype(name: str):
    if name == "float32":
        return np.float32
    if name == "float64":
        return np.float64
    raise ConfigError(f"unsupported dtype {name!r}")


class _Builder:
    """Creates named conv/dense parameters with Glorot-uniform weights."""

    def __init__(self, params: ParamSet, rng: np.random.Generator, dtype):
        self.params = params
        self.rng = rng
        self.dtype = dtype

    def conv(self, name: str, c_in: int, c_out: int, k: int, zero: bool = False):
        if zero:
            w = np.zeros((c_out, c_in, k), dtype=self.dtype)
        else:
            w = glorot_uniform(self.rng, (c_out, c_in, k), c_in * k, c_out * k, self.dtype)
        self.params.add(f"{name}.w", w)
        self.params.add(f"{name}.b", np.zeros(c_out, dtype=self.dtype))

    def dense(self, name: str, f_in: int, f_out: int):
        w = glorot_uniform(self.rng, (f_in, f_out), f_in, f_out, self.dtype)
        self.params.add(f"{name}.w", w)
        self.params.add(f"{name}.b", np.zeros(f_out, dtype=self.dtype))


def _apply_conv(params: ParamSet, name: str, x: Tensor, stride: int = 1) -> Tensor:
    return conv1d(x, params[f"{name}.w"], params[f"{name}.b"], stride=stride, padding="same")


def _apply_dense(params: ParamSet, name: str, x: Tensor) -> Tensor:
    return dense(x, params[f"{name}.w"], params[f"{name}.b"])


# ---------------------------------------------------------------------------
# attribute predictor


@dataclass(frozen=True)
class AttributePredictorConfig:
    length: int = 128
    hidden: tuple[int, ...] = (32, 64, 128)
    dtype: str = "float32"

    @property
    def attr_dim(self) -> int:
        return N_ATTRIBUTES * (self.length // SEGMENT_LEN)


class AttributePredictor:
    """MLP from a raw series to its standardized meta-attribute vector."""

    kind = "attribute_predictor"

    def __init__(self, config: AttributePredictorConfig, seed: int = 0):
        if config.length % SEGMENT_LEN != 0:
            raise ConfigError(f"length {config.length} not a multiple of {SEGMENT_LEN}")
        self.config = config
        self.dtype = _np_dtype(config.dtype)
        self.params = ParamSet()
        rng = np.random.Generator(np.random.PCG64(seed))
        build = _Builder(self.params, rng, self.dtype)
        dims = (config.length, *config.hidden, config.attr_dim)
        for i in range(len(dims) - 1):
            build.dense(f"fc{i}", dims[i], dims[i + 1])
        self._n_layers = len(dims) - 1

    def forward(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.config.length:
            raise ConfigError(
                f"attribute predictor expects (batch, {self.config.length}), got {x.data.shape}"
            )
        h = x
        for i in range(self._n_layers):
            h = _apply_dense(self.params, f"fc{i}", h)
            if i < self._n_layers - 1:
                h = tanh(h)
        return h

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 3:  # (B, 1, L) batches are fine too
            x = x[:, 0, :]
        out = self.forward(Tensor(np.ascontiguousarray(x, dtype=self.dtype)))
        return out.data.astype(np.float64)


# ---------------------------------------------------------------------------
# denoiser


@dataclass(frozen=True)
class DenoiserConfig:
    length: int = 128
    mode: str = "dpm"  # "dae" | "dpm"
    conditional: bool = True
    widths: tuple[int, ...] = (32, 64, 128, 256)
    attr_channels: int = 8
    time_dim: int = 32
    zero_init_head: bool = True
    dtype: str = "float32"

    def __post_init__(self):
        if self.mode not in ("dae", "dpm"):
            raise ConfigError(f"unknown denoiser mode {self.mode!r}")
        if self.length % SEGMENT_LEN != 0:
            raise ConfigError(f"length {self.length} not a multiple of {SEGMENT_LEN}")

    @property
    def stages(self) -> int:
        # Downsample until the bottleneck would drop below MIN_BOTTLENECK points.
        by_length = int(np.log2(self.length // MIN_BOTTLENECK))
        return min(len(self.widths), by_length)

    @property
    def attr_dim(self) -> int:
        return N_ATTRIBUTES * (self.length // SEGMENT_LEN)


class Denoiser:
    """Conditional U-Net denoiser; returns x-hat in dae mode, eps-hat in dpm mode."""

    kind = "denoiser"

    def __init__(self, config: DenoiserConfig, seed: int = 0):
        self.config = config
        self.dtype = _np_dtype(config.dtype)
        self.params = ParamSet()
        rng = np.random.Generator(np.random.PCG64(seed))
        build = _Builder(self.params, rng, self.dtype)

        widths = config.widths[: config.stages]
        a = config.attr_channels
        self._blocks: dict[str, dict] = {}

        def block(name: str, c_in: int, c_out: int, stride: int) -> int:
            """Create one block's parameters; returns its output channel count."""
            build.conv(f"{name}.main", c_in, c_out, 3)
            build.dense(f"{name}.temb", config.time_dim, c_out)
            build.dense(f"{name}.attr", config.attr_dim, a)
            c_cat = c_out + a
            for r in (1, 2):
                build.conv(f"{name}.res{r}.conv1", c_cat, c_cat, 3)
                build.conv(f"{name}.res{r}.conv2", c_cat, c_cat, 3)
            self._blocks[name] = {"stride": stride, "c_out": c_out}
            return c_cat

        build.conv("stem", 1, widths[0], 3)
        c = widths[0]
        skip_channels = [c]
        self._down = []
        for i, w in enumerate(widths):
            name = f"down{i}"
            c = block(name, c, w, stride=2)
            self._down.append(name)
            if i < len(widths) - 1:
                skip_channels.append(c)

        self._mid = []
        for j in range(2):
            name = f"mid{j}"
            c = block(name, c, widths[-1], stride=1)
            self._mid.append(name)

        self._up = []
        for i in reversed(range(len(widths))):
            name = f"up{i}"
            c = block(name, c + skip_channels.pop(), widths[i], stride=1)
            self._up.append(name)

        build.conv("head", c, 1, 3, zero=config.zero_init_head)

    def _zero_attr(self, batch: int) -> Tensor:
        return Tensor(np.zeros((batch, self.config.attr_channels), dtype=self.dtype))

    def _block_forward(self, name: str, h: Tensor, temb: Tensor, attrs: Tensor | None) -> Tensor:
        blk = self._blocks[name]
        h = _apply_conv(self.params, f"{name}.main", h, stride=blk["stride"])
        length = h.data.shape[2]
        tproj = _apply_dense(self.params, f"{name}.temb", temb)
        h = add(h, broadcast_length(tproj, length))
        if attrs is not None:
            aemb = _apply_dense(self.params, f"{name}.attr", attrs)
        else:
            aemb = self._zero_attr(h.data.shape[0])
        h = concat_channels(h, broadcast_length(aemb, length))
        for r in (1, 2):
            z = relu(h)
            z = _apply_conv(self.params, f"{name}.res{r}.conv1", z)
            z = relu(z)
            z = _apply_conv(self.params, f"{name}.res{r}.conv2", z)
            h = add(h, z)
        return h

    def forward(self, x: Tensor, t: int, attrs: Tensor | None) -> Tensor:
        cfg = self.config
        if x.data.ndim != 3 or x.data.shape[1] != 1 or x.data.shape[2] != cfg.length:
            raise ConfigError(f"denoiser expects (batch, 1, {cfg.length}), got {x.data.shape}")
        batch = x.data.shape[0]
        if cfg.conditional:
            if attrs is None:
                raise ConfigError("conditional denoiser called without attributes")
            if attrs.data.shape != (batch, cfg.attr_dim):
                raise ConfigError(
                    f"attributes shape {attrs.data.shape} != ({batch}, {cfg.attr_dim})"
                )
        else:
            attrs = None  # zero embedding regardless of what was passed

        t_index = 0 if cfg.mode == "dae" else t
        temb = Tensor(
            np.tile(
                sinusoidal_embedding(float(t_index), cfg.time_dim).astype(self.dtype),
                (batch, 1),
            )
        )

        h = _apply_conv(self.params, "stem", x)
        skips = [h]
        for i, name in enumerate(self._down):
            h = self._block_forward(name, h, temb, attrs)
            if i < len(self._down) - 1:
                skips.append(h)
        for name in self._mid:
            h = self._block_forward(name, h, temb, attrs)
        for name in self._up:
            h = upsample_nearest(h, 2)
            h = concat_channels(h, skips.pop())
            h = self._block_forward(name, h, temb, attrs)
        return _apply_conv(self.params, "head", h)


def denoise_step(model: Denoiser, x_noisy: np.ndarray, t: int, attrs: np.ndarray | None) -> np.ndarray:
    """One forward pass on a frozen denoiser.

    Returns the reconstruction in dae mode and the noise estimate in dpm mode
    (convert with :func:`tsdaug.diffusion.predict_x0`).
    """
    if model.config.mode == "dpm" and t < 1:
        raise ConfigError(f"dpm denoiser needs a step t >= 1, got {t}")
    x = np.asarray(x_noisy, dtype=model.dtype)
    if x.ndim == 2:
        x = x[:, None, :]
    a_t = None
    if attrs is not None:
        a_t = Tensor(np.ascontiguousarray(attrs, dtype=model.dtype))
    out = model.forward(Tensor(np.ascontiguousarray(x)), t, a_t)
    return out.data[:, 0, :].astype(np.float64)


# ---------------------------------------------------------------------------
# downstream classifier / regressor


@dataclass(frozen=True)
class DownstreamConfig:
    length: int = 128
    n_classes: int | None = 3  # None -> regression
    ms_branch_channels: tuple[int, ...] = (8, 16)
    conv_channels: int = 32
    fc: tuple[int, ...] = (64, 32)
    dtype: str = "float32"

    @property
    def out_dim(self) -> int:
        return self.n_classes if self.n_classes is not None else 1


_MS_KERNELS = (3, 5, 7)


class DownstreamModel:
    """Multi-scale CNN: parallel 3/5/7 convolutions, then conv+pool blocks."""

    kind = "downstream"

    def __init__(self, config: DownstreamConfig, seed: int = 0):
        if config.length % 4 != 0:
            raise ConfigError("downstream model needs length divisible by 4 (two pooling stages)")
        self.config = config
        self.dtype = _np_dtype(config.dtype)
        self.params = ParamSet()
        rng = np.random.Generator(np.random.PCG64(seed))
        build = _Builder(self.params, rng, self.dtype)

        c = 1
        for i, branch in enumerate(config.ms_branch_channels):
            for k in _MS_KERNELS:
                build.conv(f"ms{i}.k{k}", c, branch, k)
            c = branch * len(_MS_KERNELS)
        for j in range(2):
            build.conv(f"conv{j}.a", c, config.conv_channels, 3)
            build.conv(f"conv{j}.b", config.conv_channels, config.conv_channels, 3)
            c = config.conv_channels
        flat = c * (config.length // 4)
        dims = (flat, *config.fc, config.out_dim)
        for i in range(len(dims) - 1):
            build.dense(f"fc{i}", dims[i], dims[i + 1])
        self._n_fc = len(dims) - 1

    def forward(self, x: Tensor) -> Tensor:
        cfg = self.config
        if x.data.ndim != 3 or x.data.shape[1] != 1 or x.data.shape[2] != cfg.length:
            raise ConfigError(f"downstream expects (batch, 1, {cfg.length}), got {x.data.shape}")
        h = x
        for i in range(len(cfg.ms_branch_channels)):
            branches = [_apply_conv(self.params, f"ms{i}.k{k}", h) for k in _MS_KERNELS]
            h = concat_channels(concat_channels(branches[0], branches[1]), branches[2])
            h = relu(h)
        for j in range(2):
            h = relu(_apply_conv(self.params, f"conv{j}.a", h))
            h = relu(_apply_conv(self.params, f"conv{j}.b", h))
            h = maxpool1d(h, 2)
        h = flatten(h)
        for i in range(self._n_fc):
            h = _apply_dense(self.params, f"fc{i}", h)
            if i < self._n_fc - 1:
                h = relu(h)
        return h


def downstream_forward(model: DownstreamModel, x: np.ndarray) -> np.ndarray:
    """Inference pass: log-probabilities per class, or scalar predictions."""
    x = np.asarray(x, dtype=model.dtype)
    if x.ndim == 2:
        x = x[:, None, :]
    out = model.forward(Tensor(np.ascontiguousarray(x))).data.astype(np.float64)
    if model.config.n_classes is None:
        return out[:, 0]
    z = out - out.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def predict_attributes(model: AttributePredictor, x: np.ndarray) -> np.ndarray:
    return model.predict(x)


# ---------------------------------------------------------------------------
# checkpoint round-trip

_CONFIG_TYPES = {
    AttributePredictor.kind: AttributePredictorConfig,
    Denoiser.kind: DenoiserConfig,
    DownstreamModel.kind: DownstreamConfig,
}
_MODEL_TYPES = {
    AttributePredictor.kind: AttributePredictor,
    Denoiser.kind: Denoiser,
    DownstreamModel.kind: DownstreamModel,
}


def _config_to_json(config) -> dict:
    out = {}
    for key, value in asdict(config).items():
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def _config_from_json(kind: str, obj: dict):
    cls = _CONFIG_TYPES[kind]
    kwargs = dict(obj)
    for key, value in kwargs.items():
        if isinstance(value, list):
            kwargs[key] = tuple(value)
    return cls(**kwargs)


def save_model(path, model, extra_meta: dict | None = None) -> None:
    meta = {"kind": model.kind, "config": _config_to_json(model.config)}
    if extra_meta:
        meta.update(extra_meta)
    save_checkpoint(path, model.params.arrays(), meta)


def load_model(path):
    """Rebuild a model (and its meta dict) from a checkpoint file."""
    arrays, meta = load_checkpoint(path)
    kind = meta.get("kind")
    if kind not in _MODEL_TYPES:
        raise ConfigError(f"{path}: unknown model kind {kind!r}")
    config = _config_from_json(kind, meta["config"])
    model = _MODEL_TYPES[kind](config, seed=0)
    model.params.load_arrays(arrays)
    return model, meta
