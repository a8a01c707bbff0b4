"""Gating network: learnable standardization + a small MLP + softmax.

Each branch representation is rescaled by per-feature learnable shift and
scale before concatenation, so modalities with wildly different activation
magnitudes enter the gate on comparable footing. The gate's final linear
layer starts at zero, which makes the initial mixture exactly uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError
from ..nn import MLP, DenseLayerSpec, Identity, LeakyRelu, Param, softmax, softmax_backward
from .branches import MODALITIES


class LearnableStandardize:
    """x_tilde = (h - shift) / (|scale| + eps), both vectors learnable.

    |scale| keeps the denominator positive for any parameter value; the
    gradient through it uses sign(scale), with subgradient 0 at exactly 0.
    """

    def __init__(self, dim: int, eps: float = 1e-6, name: str = "std"):
        if eps <= 0:
            raise ValueError(f"standardization eps must be > 0, got {eps}")
        self.shift = Param(np.zeros(dim), name=f"{name}.shift")
        self.scale = Param(np.ones(dim), name=f"{name}.scale")
        self.eps = eps
        self._cache = None

    @property
    def dim(self) -> int:
        return self.shift.value.shape[0]

    def forward(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.dim:
            raise ShapeError(f"standardize expects (batch, {self.dim}), got {h.shape}")
        denom = np.abs(self.scale.value) + self.eps
        centered = h - self.shift.value
        self._cache = (centered, denom)
        return centered / denom

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("standardize backward called before forward")
        centered, denom = self._cache
        self.shift.grad += -grad.sum(axis=0) / denom
        self.scale.grad += (
            -np.sum(grad * centered, axis=0) / (denom * denom) * np.sign(self.scale.value)
        )
        return grad / denom

    def params(self) -> list[Param]:
        return [self.shift, self.scale]

    def state_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.shift": self.shift.value, f"{prefix}.scale": self.scale.value}

    def load_state(self, prefix: str, arrays: dict[str, np.ndarray]) -> None:
        self.shift.value[...] = arrays[f"{prefix}.shift"]
        self.scale.value[...] = arrays[f"{prefix}.scale"]


@dataclass(frozen=True)
class GateConfig:
    repr_dim: int = 64
    hidden: tuple[int, ...] = (128, 64)
    slope: float = 0.05
    dropout_p: float = 0.01
    eps: float = 1e-6

    def __post_init__(self):
        if self.repr_dim < 1:
            raise ValueError(f"repr_dim must be >= 1, got {self.repr_dim}")
        if not self.hidden:
            raise ValueError("gate needs at least one hidden layer")

    def to_json(self) -> dict:
        return {
            "repr_dim": self.repr_dim,
            "hidden": list(self.hidden),
            "slope": self.slope,
            "dropout_p": self.dropout_p,
            "eps": self.eps,
        }

    @staticmethod
    def from_json(d: dict) -> "GateConfig":
        return GateConfig(
            repr_dim=d["repr_dim"],
            hidden=tuple(d["hidden"]),
            slope=d["slope"],
            dropout_p=d["dropout_p"],
            eps=d["eps"],
        )


class GatingNetwork:
    """Maps the three branch representations to mixture weights alpha.

    Pipeline: standardize each h_i, concatenate, run the gate MLP to three
    logits, softmax. Rows of alpha sum to 1 and are strictly positive.
    """

    def __init__(self, config: GateConfig, rng: np.random.Generator):
        self.config = config
        self.standardizers = {
            m: LearnableStandardize(config.repr_dim, eps=config.eps, name=f"gate.std.{m}")
            for m in MODALITIES
        }
        act = LeakyRelu(config.slope)
        specs = []
        d_prev = len(MODALITIES) * config.repr_dim
        for width in config.hidden:
            specs.append(
                DenseLayerSpec(d_prev, width, act, batchnorm=True, dropout_p=config.dropout_p)
            )
            d_prev = width
        specs.append(DenseLayerSpec(d_prev, len(MODALITIES), Identity()))
        self.mlp = MLP(specs, rng, name="gate.mlp")
        # zero logits at init -> alpha starts at exactly (1/3, 1/3, 1/3)
        final = self.mlp.layers[-1]
        final.W.value[...] = 0.0
        final.b.value[...] = 0.0
        self._probs = None

    @property
    def repr_dim(self) -> int:
        return self.config.repr_dim

    def forward(
        self,
        hs: dict[str, np.ndarray],
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        batches = {m: np.asarray(hs[m]).shape[0] for m in MODALITIES}
        if len(set(batches.values())) != 1:
            raise ShapeError(f"gate inputs disagree on batch size: {batches}")
        z = np.hstack([self.standardizers[m].forward(hs[m]) for m in MODALITIES])
        logits = self.mlp.forward(z, train=train, rng=rng)
        self._probs = softmax(logits, axis=1)
        return self._probs

    def backward(self, d_alpha: np.ndarray) -> dict[str, np.ndarray]:
        """Returns gradient wrt each branch representation."""
        if self._probs is None:
            raise RuntimeError("gate backward called before forward")
        d_logits = softmax_backward(self._probs, d_alpha, axis=1)
        d_z = self.mlp.backward(d_logits)
        out = {}
        r = self.config.repr_dim
        for i, m in enumerate(MODALITIES):
            out[m] = self.standardizers[m].backward(d_z[:, i * r : (i + 1) * r])
        return out

    def params(self) -> list[Param]:
        out: list[Param] = []
        for m in MODALITIES:
            out.extend(self.standardizers[m].params())
        out.extend(self.mlp.params())
        return out

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {}
        for m in MODALITIES:
            arrays.update(self.standardizers[m].state_arrays(f"{prefix}std.{m}"))
        arrays.update(self.mlp.state_arrays(f"{prefix}mlp."))
        return arrays

    def load_state(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for m in MODALITIES:
            self.standardizers[m].load_state(f"{prefix}std.{m}", arrays)
        self.mlp.load_state(arrays, f"{prefix}mlp.")
