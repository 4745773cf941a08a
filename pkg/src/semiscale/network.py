"""PDE-CNN assembly: affine lift, stacked PDE layers, affine head, logistic output."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .layers import Affine, BatchNorm, Convection, ScaleSpace, Sublayer
from .semifield import parse_semifield

__all__ = ["OptimizerConfig", "NetworkConfig", "Network", "build_network", "parameter_count", "menu_entry_params"]


@dataclass
class OptimizerConfig:
    lr_init: float = 0.01
    lr_final: float = 0.001
    warmdown_batches: int = 1000
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class NetworkConfig:
    """Architecture and training hyper-parameters (JSON round-trippable).

    ``menu`` lists the sublayers of every PDE layer in order; entries are
    ``"convection"`` or a semifield name accepted by
    :func:`semiscale.semifield.parse_semifield`.
    """

    layers: int = 4
    channels: int = 12
    menu: tuple = ("convection", "tmax", "tmin")
    in_channels: int = 1
    alpha: float = 2.0
    radius: int = 2
    boundary: str = "replicate"
    batch_norm: bool = True
    batch_size: int = 8
    seed: int = 0
    eval_every: int = 100
    patience: int = 2000
    max_batches: int = 20000
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if isinstance(self.optimizer, dict):
            opt = dict(self.optimizer)
            if "betas" in opt:
                opt["betas"] = tuple(opt["betas"])
            self.optimizer = OptimizerConfig(**opt)
        self.menu = tuple(self.menu)
        self.validate()

    def validate(self):
        if self.layers < 1 or self.channels < 1 or self.in_channels < 1:
            raise ValueError("layers, channels and in_channels must be at least 1")
        if self.radius < 1:
            raise ValueError("radius must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        for entry in self.menu:
            if entry != "convection":
                parse_semifield(entry)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["menu"] = list(self.menu)
        d["optimizer"]["betas"] = list(self.optimizer.betas)
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "NetworkConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def menu_entry_params(entry: str) -> int:
    """Parameters per channel of one menu entry."""
    return 2 if entry == "convection" else 4


def parameter_count(config: NetworkConfig) -> int:
    """Closed form ``c_in C + N (C^2 + 2 C + C sum_s p_s) + C``.

    ``p_s`` is 2 for convection and 4 for a scale-space sublayer; the
    ``2 C`` term is the batch-norm scale and shift.  Without batch norm
    the mixing layer carries a bias instead and the term becomes ``C``.
    """
    C, N = config.channels, config.layers
    per_layer = C * C + C * sum(menu_entry_params(e) for e in config.menu)
    per_layer += 2 * C if config.batch_norm else C
    return config.in_channels * C + N * per_layer + C


class Network:
    """Sequential PDE-CNN returning per-pixel probabilities ``(B, 1, H, W)``."""

    def __init__(self, config: NetworkConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        C = config.channels
        self.blocks: list[tuple[str, Sublayer]] = [("lift", Affine(config.in_channels, C, bias=False, rng=rng))]
        for n in range(config.layers):
            for s, entry in enumerate(config.menu):
                name = f"layer{n}.{s}.{entry.replace(':', '_')}"
                if entry == "convection":
                    sub = Convection(C, rng=rng)
                else:
                    sub = ScaleSpace(C, parse_semifield(entry), alpha=config.alpha, radius=config.radius,
                                     boundary=config.boundary, rng=rng)
                self.blocks.append((name, sub))
            self.blocks.append((f"layer{n}.mix", Affine(C, C, bias=not config.batch_norm, rng=rng)))
            if config.batch_norm:
                self.blocks.append((f"layer{n}.bn", BatchNorm(C)))
        self.blocks.append(("head", Affine(C, 1, bias=False, rng=rng)))
        self._out = None

    # -- parameters --------------------------------------------------------
    def named_parameters(self):
        for bname, sub in self.blocks:
            for pname, p in sub.params.items():
                yield f"{bname}.{pname}", p

    def named_gradients(self):
        for bname, sub in self.blocks:
            for pname in sub.params:
                yield f"{bname}.{pname}", sub.grads[pname]

    def named_buffers(self):
        for bname, sub in self.blocks:
            for k, v in sub.buffers.items():
                yield f"{bname}.{k}", v

    @property
    def n_params(self) -> int:
        return sum(sub.n_params for _, sub in self.blocks)

    def state_dict(self) -> dict:
        d = {k: v.copy() for k, v in self.named_parameters()}
        d.update({f"buffer:{k}": v.copy() for k, v in self.named_buffers()})
        return d

    def load_state_dict(self, state: dict):
        for bname, sub in self.blocks:
            for pname in sub.params:
                key = f"{bname}.{pname}"
                if state[key].shape != sub.params[pname].shape:
                    raise ValueError(f"shape mismatch for {key}")
                sub.params[pname][...] = state[key]
            for k in sub.buffers:
                sub.buffers[k] = np.array(state[f"buffer:{bname}.{k}"], dtype=float)

    # -- passes ------------------------------------------------------------
    def logits(self, x, training=True):
        x = np.asarray(x, dtype=float)
        if x.ndim == 3:
            x = x[:, None]
        for _, sub in self.blocks:
            x = sub.forward(x, training=training)
        return x

    def forward(self, x, training=True):
        z = self.logits(x, training)
        out = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic
        self._out = out if training else None
        return out

    def predict(self, x, batch_size=32):
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.forward(x[i:i + batch_size], training=False) for i in range(0, len(x), batch_size)])

    def backward(self, grad_out):
        if self._out is None:
            raise RuntimeError("backward needs a preceding training forward pass")
        g = grad_out * self._out * (1.0 - self._out)
        for _, sub in reversed(self.blocks):
            g = sub.backward(g)
        return g


def build_network(config: NetworkConfig) -> Network:
    return Network(config)
