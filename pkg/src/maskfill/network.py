"""Encoder-decoder inpainting network built on the autodiff engine.

Architecture: ``depth`` encoder levels of two 3x3 conv+relu blocks with
channel doubling and 2x2 max pooling, a two-conv bottleneck, a mirrored
decoder (nearest-neighbor upsample, skip concatenation, two conv+relu
blocks), and a final 1x1 convolution + sigmoid down to 3 channels.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import data as dp
from . import masks as mk
from .compositing import composite
from .metrics import psnr, ssim

CHECKPOINT_MAGIC = b"SPNT"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed checkpoint file."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch and batch index."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class NetworkConfig:
    depth: int = 2
    base_channels: int = 8
    input_size: tuple[int, int] = (32, 32)
    input_channels: int = 3        # 4 feeds the mask as an extra channel
    kernel_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.base_channels < 1:
            raise ValueError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if self.input_channels not in (3, 4):
            raise ValueError(f"input_channels must be 3 or 4, got {self.input_channels}")
        h, w = self.input_size
        step = 2 ** self.depth
        if h % step:
            raise ValueError(f"input height {h} not divisible by 2^depth = {step}")
        if w % step:
            raise ValueError(f"input width {w} not divisible by 2^depth = {step}")

    @property
    def mask_channel(self) -> bool:
        return self.input_channels == 4

    def to_dict(self) -> dict:
        return {"depth": self.depth, "base_channels": self.base_channels,
                "input_size": list(self.input_size), "input_channels": self.input_channels,
                "kernel_size": self.kernel_size, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        d["input_size"] = tuple(d["input_size"])
        return cls(**d)


def _layer_plan(config: NetworkConfig):
    """Yield (name, c_in, c_out, k) for every convolution, in graph order."""
    k = config.kernel_size
    b = config.base_channels
    c_prev = config.input_channels
    for i in range(config.depth):
        c = b * 2 ** i
        yield f"enc{i}_conv1", c_prev, c, k
        yield f"enc{i}_conv2", c, c, k
        c_prev = c
    c = b * 2 ** config.depth
    yield "bottleneck_conv1", c_prev, c, k
    yield "bottleneck_conv2", c, c, k
    c_prev = c
    for i in reversed(range(config.depth)):
        c = b * 2 ** i
        yield f"dec{i}_conv1", c_prev + c, c, k
        yield f"dec{i}_conv2", c, c, k
        c_prev = c
    yield "head", c_prev, 3, 1


class Network:
    """Parameter container plus the config that produced it."""

    def __init__(self, config: NetworkConfig, params: dict[str, ad.Tensor]):
        self.config = config
        self.params = params

    def parameters(self) -> list[ad.Tensor]:
        return list(self.params.values())

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.parameters())


def parameter_count(config: NetworkConfig) -> int:
    """Parameter count as a pure function of the config."""
    return sum(c_out * c_in * k * k + c_out for _, c_in, c_out, k in _layer_plan(config))


def build_network(config: NetworkConfig) -> Network:
    """He-uniform kernels (fan-in scaling), zero biases, keyed by config.seed."""
    rng = np.random.default_rng(config.seed)
    params: dict[str, ad.Tensor] = {}
    for name, c_in, c_out, k in _layer_plan(config):
        fan_in = c_in * k * k
        limit = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(c_out, c_in, k, k)).astype(np.float32)
        params[f"{name}.weight"] = ad.Tensor(w, requires_grad=True, name=f"{name}.weight")
        params[f"{name}.bias"] = ad.Tensor(np.zeros(c_out, dtype=np.float32),
                                           requires_grad=True, name=f"{name}.bias")
    return Network(config, params)


def _conv_block(net: Network, name: str, x: ad.Tensor, padding: int) -> ad.Tensor:
    return ad.relu(ad.conv2d(x, net.params[f"{name}.weight"], net.params[f"{name}.bias"],
                             stride=1, padding=padding))


def forward(net: Network, batch) -> ad.Tensor:
    """Run the network on an N x C_in x H x W batch; output N x 3 x H x W in (0, 1)."""
    cfg = net.config
    x = batch if isinstance(batch, ad.Tensor) else ad.Tensor(np.asarray(batch, dtype=np.float32))
    n, c, h, w = x.data.shape
    if c != cfg.input_channels or (h, w) != cfg.input_size:
        raise ValueError(f"batch shape {x.data.shape} incompatible with config "
                         f"(expects C={cfg.input_channels}, HxW={cfg.input_size})")
    pad = cfg.kernel_size // 2
    skips = []
    for i in range(cfg.depth):
        x = _conv_block(net, f"enc{i}_conv1", x, pad)
        x = _conv_block(net, f"enc{i}_conv2", x, pad)
        skips.append(x)
        x = ad.maxpool2d(x)
    x = _conv_block(net, "bottleneck_conv1", x, pad)
    x = _conv_block(net, "bottleneck_conv2", x, pad)
    for i in reversed(range(cfg.depth)):
        x = ad.upsample_nearest(x, 2)
        x = ad.concat_channels(x, skips[i])
        x = _conv_block(net, f"dec{i}_conv1", x, pad)
        x = _conv_block(net, f"dec{i}_conv2", x, pad)
    x = ad.conv2d(x, net.params["head.weight"], net.params["head.bias"], stride=1, padding=0)
    return ad.sigmoid(x)


def predict_images(net: Network, images: list[np.ndarray],
                   masks: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Forward a list of H x W x 3 images; optionally append the mask channel."""
    batch = dp.to_planar(images)
    if net.config.mask_channel:
        if masks is None:
            raise ValueError("network expects a mask channel but no masks were given")
        mchan = np.stack([m.astype(np.float32)[None] for m in masks])
        batch = np.concatenate([batch, mchan], axis=1)
    return dp.from_planar(forward(net, batch).data)


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(net: Network, path) -> None:
    """Binary layout: magic, u32 version, u64 header length, JSON header,
    then raw little-endian float32 tensor payloads in header order."""
    names = list(net.params.keys())
    header = {
        "config": net.config.to_dict(),
        "tensors": [{"name": n, "shape": list(net.params[n].data.shape), "dtype": "f32"}
                    for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(net.params[n].data, dtype="<f4").tobytes())


def load_checkpoint(path) -> Network:
    with open(path, "rb") as fh:
        payload = fh.read()
    if payload[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic: expected {CHECKPOINT_MAGIC!r}, got {payload[:4]!r}")
    if len(payload) < 16:
        raise CheckpointError("truncated payload: header incomplete")
    (version,) = struct.unpack_from("<I", payload, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"version mismatch: file v{version}, supported v{CHECKPOINT_VERSION}")
    (hlen,) = struct.unpack_from("<Q", payload, 8)
    if len(payload) < 16 + hlen:
        raise CheckpointError("truncated payload: JSON header incomplete")
    try:
        header = json.loads(payload[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from exc
    config = NetworkConfig.from_dict(header["config"])
    params: dict[str, ad.Tensor] = {}
    offset = 16 + hlen
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape)) * 4
        if offset + nbytes > len(payload):
            raise CheckpointError(f"truncated payload: tensor {entry['name']!r} "
                                  f"needs {nbytes} bytes past offset {offset}")
        arr = np.frombuffer(payload, dtype="<f4", count=int(np.prod(shape)),
                            offset=offset).reshape(shape).copy()
        params[entry["name"]] = ad.Tensor(arr, requires_grad=True, name=entry["name"])
        offset += nbytes
    if offset != len(payload):
        raise CheckpointError(f"shape/header disagreement: {len(payload) - offset} "
                              "trailing bytes after declared tensors")
    net = Network(config, params)
    expected = {name for name, _, _, _ in _layer_plan(config)}
    declared = {e["name"].rsplit(".", 1)[0] for e in header["tensors"]}
    if expected != declared:
        raise CheckpointError("shape/header disagreement: tensor names do not match the config")
    return net


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_psnr: float
    val_ssim: float
    seconds: float


@dataclass
class TrainStats:
    epochs: list[EpochStats] = field(default_factory=list)


def _prepare_sample(image: np.ndarray, regime: mk.MaskRegime, fill: float,
                    augment_cfg: dp.AugmentConfig, seed: int, epoch: int, index: int):
    clean = dp.augment(image, augment_cfg, dp.sample_augment_seed(seed, epoch, index))
    h, w = clean.shape[:2]
    mask = mk.generate_mask(h, w, regime, dp.sample_mask_seed(seed, epoch, index))
    corrupted = mk.apply_mask(clean, mask, fill)
    return clean, corrupted, mask


def _assemble_batch(net: Network, cleans, corrupteds, masks_):
    x = dp.to_planar(corrupteds)
    if net.config.mask_channel:
        mchan = np.stack([m.astype(np.float32)[None] for m in masks_])
        x = np.concatenate([x, mchan], axis=1)
    target = dp.to_planar(cleans)
    return x, target


def evaluate_composited(net: Network, images: list[np.ndarray], regime: mk.MaskRegime,
                        fill: float, seed: int) -> tuple[float, float]:
    """Mean composited PSNR/SSIM over a validation set with fixed seeded masks."""
    if not images:
        return float("nan"), float("nan")
    psnrs, ssims = [], []
    for idx, img in enumerate(images):
        h, w = img.shape[:2]
        mask = mk.generate_mask(h, w, regime, dp.derive_seed("valmask", seed, idx))
        corrupted = mk.apply_mask(img, mask, fill)
        pred = predict_images(net, [corrupted], [mask])[0]
        comp = composite(corrupted, pred, mask)
        p = psnr(comp, img)
        if np.isfinite(p):
            psnrs.append(p)
        ssims.append(ssim(comp, img))
    mean_psnr = float(np.mean(psnrs)) if psnrs else float("inf")
    return mean_psnr, float(np.mean(ssims))


def train(net: Network, train_set: list[np.ndarray], val_set: list[np.ndarray],
          epochs: int, batch_size: int,
          optimizer: OptimizerConfig = OptimizerConfig(),
          augment_cfg: dp.AugmentConfig = dp.AugmentConfig(),
          regime: mk.MaskRegime = mk.VARIABLE,
          fill: float = mk.DEFAULT_FILL,
          seed: int = 0,
          masked_loss: bool = False) -> TrainStats:
    """Train in place: corrupt with fresh per-epoch masks, regress to the
    clean image with MSE, update every parameter with Adam.

    Deterministic given (config, seed, data order). Raises
    TrainingDivergedError on a non-finite loss.
    """
    if not train_set:
        raise ValueError("training set is empty")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    opt = ad.Adam(net.parameters(), lr=optimizer.lr, beta1=optimizer.beta1,
                  beta2=optimizer.beta2, epsilon=optimizer.epsilon)
    stats = TrainStats()
    for epoch in range(epochs):
        t0 = time.perf_counter()
        losses = []
        for batch_idx, batch in enumerate(dp.make_batches(len(train_set), batch_size, epoch, seed)):
            cleans, corrupteds, masks_ = [], [], []
            for index in batch:
                clean, corrupted, mask = _prepare_sample(
                    train_set[index], regime, fill, augment_cfg, seed, epoch, index)
                cleans.append(clean)
                corrupteds.append(corrupted)
                masks_.append(mask)
            x, target = _assemble_batch(net, cleans, corrupteds, masks_)
            out = forward(net, x)
            weight = None
            if masked_loss:
                weight = np.stack([np.broadcast_to(m.astype(np.float32), (3,) + m.shape)
                                   for m in masks_])
            loss = ad.mse(out, target, weight=weight)
            if not np.isfinite(loss.item()):
                raise TrainingDivergedError(epoch, batch_idx)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
        val_psnr, val_ssim = evaluate_composited(net, val_set, regime, fill, seed)
        stats.epochs.append(EpochStats(
            epoch=epoch, train_loss=float(np.mean(losses)),
            val_psnr=val_psnr, val_ssim=val_ssim,
            seconds=time.perf_counter() - t0))
    return stats
