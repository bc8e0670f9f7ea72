"""Temporal convolutional GAN for windows of scaled factor returns.

Both networks are causal TCNs built from temporal blocks: two dilated causal
convolutions, each followed by (optional batch norm and) a PReLU, plus a
residual connection; block outputs also feed a skip path whose right-aligned
sum goes through a final 1x1 convolution. Convolutions are unpadded, so the
receptive field is 1 + 2 * sum(dilation_i * (kernel_i - 1)) and an input of
length s + rf - 1 maps to an output of length s. The full-size spec (six
blocks, dilations 1,1,2,4,8,16, kernels 1,2,2,2,2,2, width 100) has rf = 63.

The generator maps 3 channels of Gaussian noise to one output channel and
uses batch norm; the discriminator takes one channel over a window of
exactly rf samples, uses no batch norm, and emits a single real/fake logit.
Training alternates Adam steps on the binary cross-entropy objective
(discriminator: real to 1, generated to 0; generator: generated to 1) with
betas (0, 0.9), and logs losses on a fixed cadence. Everything is seeded:
weight init, noise, and batch sampling derive from one integer seed, and
checkpoints serialize every parameter (and batch-norm running stats) to JSON
exactly, so a saved model regenerates bitwise-identical samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch
from torch import nn

from .serialize import dump_json

__all__ = [
    "TcnSpec",
    "TrainConfig",
    "GanModel",
    "GanTrainingError",
    "TrainResult",
    "train_gan",
    "gan_losses",
    "FULL_SPEC",
    "DESK_SPEC",
    "MINI_SPEC",
    "desk_config",
]


class GanTrainingError(RuntimeError):
    """Raised when training hits a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, message: str, iteration: int, log: list):
        super().__init__(message)
        self.iteration = iteration
        self.log = log


@dataclass(frozen=True)
class TcnSpec:
    """Architecture hyperparameters shared by generator and discriminator."""

    hidden: int = 100
    dilations: tuple[int, ...] = (1, 1, 2, 4, 8, 16)
    kernels: tuple[int, ...] = (1, 2, 2, 2, 2, 2)
    noise_channels: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "dilations", tuple(int(x) for x in self.dilations))
        object.__setattr__(self, "kernels", tuple(int(x) for x in self.kernels))
        if len(self.dilations) != len(self.kernels):
            raise ValueError("dilations and kernels must have equal length")
        if self.hidden < 1 or self.noise_channels < 1:
            raise ValueError("hidden and noise_channels must be positive")
        if any(d < 1 for d in self.dilations) or any(k < 1 for k in self.kernels):
            raise ValueError("dilations and kernels must be >= 1")

    @property
    def blocks(self) -> int:
        return len(self.dilations)

    @property
    def receptive_field(self) -> int:
        return 1 + 2 * sum(d * (k - 1) for d, k in zip(self.dilations, self.kernels))

    @property
    def window(self) -> int:
        """Training window length: the discriminator sees exactly one field."""
        return self.receptive_field

    def to_json_dict(self) -> dict:
        return {
            "hidden": self.hidden,
            "dilations": list(self.dilations),
            "kernels": list(self.kernels),
            "noise_channels": self.noise_channels,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TcnSpec":
        return cls(
            hidden=int(obj["hidden"]),
            dilations=tuple(obj["dilations"]),
            kernels=tuple(obj["kernels"]),
            noise_channels=int(obj["noise_channels"]),
        )


FULL_SPEC = TcnSpec()
DESK_SPEC = TcnSpec(hidden=16)
MINI_SPEC = TcnSpec(hidden=8, dilations=(1, 1), kernels=(1, 2))


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults are the full-scale production run."""

    iterations: int = 50000
    batch_size: int = 128
    lr_generator: float = 5e-6
    lr_discriminator: float = 5e-5
    adam_beta1: float = 0.0
    adam_beta2: float = 0.9
    adam_eps: float = 1e-8
    d_steps: int = 1
    log_every: int = 100
    patience: int | None = None
    dtype: str = "float32"

    def torch_dtype(self) -> torch.dtype:
        return {"float32": torch.float32, "float64": torch.float64}[self.dtype]


class _TemporalBlock(nn.Module):
    """conv -> [bn] -> prelu, twice, with a right-aligned residual connection."""

    def __init__(self, c_in: int, hidden: int, kernel: int, dilation: int, batch_norm: bool):
        super().__init__()
        self.conv1 = nn.Conv1d(c_in, hidden, kernel, dilation=dilation)
        self.conv2 = nn.Conv1d(hidden, hidden, kernel, dilation=dilation)
        self.bn1 = nn.BatchNorm1d(hidden) if batch_norm else None
        self.bn2 = nn.BatchNorm1d(hidden) if batch_norm else None
        self.act1 = nn.PReLU()
        self.act2 = nn.PReLU()
        self.downsample = nn.Conv1d(c_in, hidden, 1) if c_in != hidden else None

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = self.conv1(x)
        if self.bn1 is not None:
            out = self.bn1(out)
        out = self.act1(out)
        out = self.conv2(out)
        if self.bn2 is not None:
            out = self.bn2(out)
        out = self.act2(out)
        res = x if self.downsample is None else self.downsample(x)
        res = res[..., -out.shape[-1] :]  # crop left: unpadded convs shrink the tail end only
        return out + res, out


class _Tcn(nn.Module):
    """Stack of temporal blocks with a summed skip path and 1x1 output conv."""

    def __init__(self, spec: TcnSpec, in_channels: int, batch_norm: bool):
        super().__init__()
        blocks = []
        c_in = in_channels
        for dilation, kernel in zip(spec.dilations, spec.kernels):
            blocks.append(_TemporalBlock(c_in, spec.hidden, kernel, dilation, batch_norm))
            c_in = spec.hidden
        self.blocks = nn.ModuleList(blocks)
        self.out_conv = nn.Conv1d(spec.hidden, 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        h = x
        for block in self.blocks:
            h, skip = block(h)
            skips.append(skip)
        length = h.shape[-1]
        total = skips[0][..., -length:]
        for skip in skips[1:]:
            total = total + skip[..., -length:]
        return self.out_conv(total)


@dataclass
class GanModel:
    """Generator/discriminator pair plus the spec that shaped them."""

    spec: TcnSpec
    generator: _Tcn = field(repr=False)
    discriminator: _Tcn = field(repr=False)

    @classmethod
    def initialize(cls, spec: TcnSpec, seed: int, dtype: torch.dtype = torch.float32) -> "GanModel":
        """Fresh seeded weights; identical seeds give identical models."""
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            gen = _Tcn(spec, spec.noise_channels, batch_norm=True)
            disc = _Tcn(spec, 1, batch_norm=False)
        return cls(spec=spec, generator=gen.to(dtype), discriminator=disc.to(dtype))

    @property
    def dtype(self) -> torch.dtype:
        return next(self.generator.parameters()).dtype

    def noise(self, s: int, count: int, seed: int) -> torch.Tensor:
        """Gaussian input of shape (count, noise_channels, s + rf - 1)."""
        g = torch.Generator().manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
        shape = (count, self.spec.noise_channels, s + self.spec.receptive_field - 1)
        return torch.randn(shape, generator=g, dtype=self.dtype)

    def generate(self, s: int, count: int, seed: int) -> np.ndarray:
        """count series of length s, deterministic in (model weights, seed)."""
        if s < 1 or count < 1:
            raise ValueError("s and count must be positive")
        self.generator.eval()
        with torch.no_grad():
            out = self.generator(self.noise(s, count, seed))
        return out.squeeze(1).numpy().astype(np.float64)

    def discriminate(self, windows: np.ndarray) -> np.ndarray:
        """Real-data probability in (0, 1) for each window of length spec.window."""
        w = np.asarray(windows, dtype=np.float64)
        if w.ndim == 1:
            w = w[None, :]
        if w.shape[1] != self.spec.window:
            raise ValueError(f"windows must have length {self.spec.window}, got {w.shape[1]}")
        x = torch.as_tensor(w, dtype=self.dtype).unsqueeze(1)
        self.discriminator.eval()
        with torch.no_grad():
            logits = self.discriminator(x)
        return torch.sigmoid(logits).squeeze(-1).squeeze(-1).numpy().astype(np.float64)

    # -- persistence ---------------------------------------------------------

    def to_json_dict(self) -> dict:
        def encode(net: nn.Module) -> dict:
            out = {}
            for name, tensor in net.state_dict().items():
                data = tensor.detach().to(torch.float64).reshape(-1).tolist()
                if tensor.dtype in (torch.int64, torch.int32):
                    data = [int(v) for v in data]
                out[name] = {"shape": list(tensor.shape), "data": data}
            return out

        return {
            "format": "tcn-gan/1",
            "spec": self.spec.to_json_dict(),
            "dtype": str(self.dtype).replace("torch.", ""),
            "generator": encode(self.generator),
            "discriminator": encode(self.discriminator),
        }

    def save(self, path) -> None:
        dump_json(self.to_json_dict(), path)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GanModel":
        if obj.get("format") != "tcn-gan/1":
            raise ValueError(f"unsupported checkpoint format {obj.get('format')!r}")
        spec = TcnSpec.from_json_dict(obj["spec"])
        dtype = {"float32": torch.float32, "float64": torch.float64}[obj.get("dtype", "float64")]
        model = cls.initialize(spec, seed=0, dtype=dtype)

        def decode(net: nn.Module, blob: dict) -> None:
            state = {}
            for name, entry in blob.items():
                ref = net.state_dict()[name]
                t = torch.tensor(entry["data"], dtype=torch.float64).reshape(entry["shape"])
                state[name] = t.to(ref.dtype)
            net.load_state_dict(state)

        decode(model.generator, obj["generator"])
        decode(model.discriminator, obj["discriminator"])
        return model

    @classmethod
    def load(cls, path) -> "GanModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def gan_losses(
    model: GanModel, real: torch.Tensor, z: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable (discriminator, generator) BCE losses for fixed inputs.

    real: (batch, 1, window); z: (batch, noise_channels, 2*window - 1).
    Exposed separately so gradient checks can difference the exact training
    objective against autograd.
    """
    bce = nn.BCEWithLogitsLoss()
    fake = model.generator(z)
    d_real = model.discriminator(real).reshape(-1)
    d_fake = model.discriminator(fake).reshape(-1)
    ones = torch.ones_like(d_real)
    zeros = torch.zeros_like(d_fake)
    d_loss = bce(d_real, ones) + bce(d_fake, zeros)
    g_loss = bce(d_fake, ones)
    return d_loss, g_loss


@dataclass
class TrainResult:
    model: GanModel
    log: list[tuple[int, float, float]]  # (iteration, g_loss, d_loss)
    stopped_early: bool = False

    def write_log_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,g_loss,d_loss\n")
            for it, g, d in self.log:
                fh.write(f"{it},{repr(g)},{repr(d)}\n")


def _derived_seeds(seed: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]


def train_gan(
    data: np.ndarray,
    spec: TcnSpec,
    config: TrainConfig,
    seed: int,
) -> TrainResult:
    """Alternating BCE minimax training on rows of a window matrix.

    data must be (rows, spec.window). Per iteration: d_steps discriminator
    updates on fresh real batches and fresh noise, then one generator update
    on fresh noise. Losses are logged every config.log_every iterations (and
    at the final one); a non-finite loss aborts with a GanTrainingError
    carrying the log so far. With patience set, training stops once the
    logged generator loss has not improved for that many consecutive log
    points.
    """
    windows = np.asarray(data, dtype=np.float64)
    if windows.ndim != 2 or windows.shape[1] != spec.window:
        raise ValueError(
            f"training data must be (rows, {spec.window}), got {windows.shape}"
        )
    if windows.shape[0] < 1:
        raise ValueError("training data is empty")
    init_seed, noise_seed, batch_seed = _derived_seeds(seed, 3)
    dtype = config.torch_dtype()
    model = GanModel.initialize(spec, init_seed, dtype=dtype)
    model.generator.train()
    model.discriminator.train()
    opt_d = torch.optim.Adam(
        model.discriminator.parameters(),
        lr=config.lr_discriminator,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_eps,
    )
    opt_g = torch.optim.Adam(
        model.generator.parameters(),
        lr=config.lr_generator,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_eps,
    )
    bce = nn.BCEWithLogitsLoss()
    rng = np.random.default_rng(batch_seed)
    noise_gen = torch.Generator().manual_seed(noise_seed & 0x7FFFFFFFFFFFFFFF)
    z_shape = (config.batch_size, spec.noise_channels, 2 * spec.window - 1)
    tensor_data = torch.as_tensor(windows, dtype=dtype)

    def real_batch() -> torch.Tensor:
        idx = rng.integers(0, windows.shape[0], size=config.batch_size)
        return tensor_data[idx].unsqueeze(1)

    log: list[tuple[int, float, float]] = []
    best_g = math.inf
    stale = 0
    stopped_early = False
    for it in range(1, config.iterations + 1):
        for _ in range(config.d_steps):
            z = torch.randn(z_shape, generator=noise_gen, dtype=dtype)
            with torch.no_grad():
                fake = model.generator(z)
            d_real = model.discriminator(real_batch()).reshape(-1)
            d_fake = model.discriminator(fake).reshape(-1)
            d_loss = bce(d_real, torch.ones_like(d_real)) + bce(
                d_fake, torch.zeros_like(d_fake)
            )
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()
        z = torch.randn(z_shape, generator=noise_gen, dtype=dtype)
        d_on_fake = model.discriminator(model.generator(z)).reshape(-1)
        g_loss = bce(d_on_fake, torch.ones_like(d_on_fake))
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()

        g_val, d_val = g_loss.item(), d_loss.item()
        if not (math.isfinite(g_val) and math.isfinite(d_val)):
            log.append((it, g_val, d_val))
            raise GanTrainingError(
                f"non-finite loss at iteration {it}: g={g_val}, d={d_val}",
                iteration=it,
                log=log,
            )
        if it % config.log_every == 0 or it == config.iterations:
            log.append((it, g_val, d_val))
            if config.patience is not None:
                if g_val < best_g - 1e-12:
                    best_g = g_val
                    stale = 0
                else:
                    stale += 1
                    if stale >= config.patience:
                        stopped_early = True
                        break
    model.generator.eval()
    model.discriminator.eval()
    return TrainResult(model=model, log=log, stopped_early=stopped_early)


def desk_config(iterations: int = 1500) -> TrainConfig:
    """Reduced profile sized for the bundled small dataset on one CPU core."""
    return replace(TrainConfig(), iterations=iterations, batch_size=64)
