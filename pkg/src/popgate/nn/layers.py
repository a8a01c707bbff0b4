"""Dense layers with hand-derived backward passes.

All math is float64. A layer block composes linear -> batchnorm -> activation
-> dropout; batchnorm and dropout switch to inference behavior in eval mode.
Dropout is inverted (scaled at train time), so eval applies no rescale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import ShapeError


class Param:
    """A trainable tensor paired with its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:  # pragma: no cover
        return f"Param({self.name or 'unnamed'}, shape={self.value.shape})"


# ---------------------------------------------------------------------------
# activations


@dataclass(frozen=True)
class Elu:
    alpha: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"ELU alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class LeakyRelu:
    slope: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.slope < 1.0:
            raise ValueError(f"LeakyReLU slope must be in (0,1), got {self.slope}")


@dataclass(frozen=True)
class Sigmoid:
    pass


@dataclass(frozen=True)
class Identity:
    pass


Activation = Elu | LeakyRelu | Sigmoid | Identity

_ACTIVATION_TAGS = {Elu: "elu", LeakyRelu: "leaky_relu", Sigmoid: "sigmoid", Identity: "identity"}


def activation_to_json(act: Activation) -> dict:
    d = {"kind": _ACTIVATION_TAGS[type(act)]}
    if isinstance(act, Elu):
        d["alpha"] = act.alpha
    elif isinstance(act, LeakyRelu):
        d["slope"] = act.slope
    return d


def activation_from_json(d: dict) -> Activation:
    kind = d["kind"]
    if kind == "elu":
        return Elu(alpha=d.get("alpha", 0.1))
    if kind == "leaky_relu":
        return LeakyRelu(slope=d.get("slope", 0.05))
    if kind == "sigmoid":
        return Sigmoid()
    if kind == "identity":
        return Identity()
    raise ValueError(f"unknown activation kind {kind!r}")


# open-interval clamp for sigmoid outputs: float64 saturates to exactly
# 0 or 1 past |x| ~ 37, but downstream code relies on 0 < sigma(x) < 1
_SIG_LO = float(np.finfo(np.float64).tiny)
_SIG_HI = float(np.nextafter(1.0, 0.0))


def activation_forward(x: np.ndarray, act: Activation) -> np.ndarray:
    """Elementwise activation. Rejects non-finite input with a diagnostic."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise ValueError(f"activation input contains {bad} non-finite entries")
    if isinstance(act, Elu):
        out = x.copy()
        neg = x <= 0  # expm1 only where needed; it overflows on large x
        out[neg] = act.alpha * np.expm1(x[neg])
        return out
    if isinstance(act, LeakyRelu):
        return np.where(x > 0, x, act.slope * x)
    if isinstance(act, Sigmoid):
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return np.clip(out, _SIG_LO, _SIG_HI, out=out)
    if isinstance(act, Identity):
        return x.copy()
    raise TypeError(f"unknown activation {act!r}")


def activation_backward(grad: np.ndarray, pre: np.ndarray, out: np.ndarray, act: Activation) -> np.ndarray:
    """Gradient wrt the pre-activation, given upstream grad and cached values."""
    if isinstance(act, Elu):
        # d/dx = 1 for x > 0, alpha * e^x = out + alpha otherwise
        return grad * np.where(pre > 0, 1.0, out + act.alpha)
    if isinstance(act, LeakyRelu):
        return grad * np.where(pre > 0, 1.0, act.slope)
    if isinstance(act, Sigmoid):
        return grad * out * (1.0 - out)
    if isinstance(act, Identity):
        return grad
    raise TypeError(f"unknown activation {act!r}")


# ---------------------------------------------------------------------------
# layer spec


@dataclass(frozen=True)
class DenseLayerSpec:
    """One dense block: linear, then optional batchnorm, activation, dropout."""

    in_dim: int
    out_dim: int
    activation: Activation = Identity()
    batchnorm: bool = False
    dropout_p: float = 0.0

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0,1), got {self.dropout_p}")

    def to_json(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "activation": activation_to_json(self.activation),
            "batchnorm": self.batchnorm,
            "dropout_p": self.dropout_p,
        }

    @staticmethod
    def from_json(d: dict) -> "DenseLayerSpec":
        return DenseLayerSpec(
            in_dim=d["in_dim"],
            out_dim=d["out_dim"],
            activation=activation_from_json(d["activation"]),
            batchnorm=d["batchnorm"],
            dropout_p=d["dropout_p"],
        )


class BatchNorm:
    """Per-feature batch normalization over axis 0."""

    def __init__(self, dim: int, momentum: float = 0.1, eps: float = 1e-5, name: str = ""):
        self.gamma = Param(np.ones(dim), name=f"{name}.gamma")
        self.beta = Param(np.zeros(dim), name=f"{name}.beta")
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps
        self._cache = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            mean = x.mean(axis=0)
            var = x.var(axis=0)  # population variance
            self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv_std
            self._cache = ("train", x, xhat, mean, var, inv_std)
        else:
            xhat = (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
            self._cache = ("eval", xhat)
        return self.gamma.value * xhat + self.beta.value

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("batchnorm backward called before forward")
        if self._cache[0] == "eval":
            xhat = self._cache[1]
            self.beta.grad += grad.sum(axis=0)
            self.gamma.grad += (grad * xhat).sum(axis=0)
            return grad * self.gamma.value / np.sqrt(self.running_var + self.eps)
        _, x, xhat, mean, var, inv_std = self._cache
        n = x.shape[0]
        self.beta.grad += grad.sum(axis=0)
        self.gamma.grad += (grad * xhat).sum(axis=0)
        dxhat = grad * self.gamma.value
        dvar = np.sum(dxhat * (x - mean), axis=0) * (-0.5) * inv_std**3
        dmean = -np.sum(dxhat, axis=0) * inv_std + dvar * np.mean(-2.0 * (x - mean), axis=0)
        return dxhat * inv_std + dvar * 2.0 * (x - mean) / n + dmean / n

    def params(self) -> list[Param]:
        return [self.gamma, self.beta]

    def state_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.gamma": self.gamma.value,
            f"{prefix}.beta": self.beta.value,
            f"{prefix}.running_mean": self.running_mean,
            f"{prefix}.running_var": self.running_var,
        }

    def load_state(self, prefix: str, arrays: dict[str, np.ndarray]) -> None:
        self.gamma.value[...] = arrays[f"{prefix}.gamma"]
        self.beta.value[...] = arrays[f"{prefix}.beta"]
        self.running_mean[...] = arrays[f"{prefix}.running_mean"]
        self.running_var[...] = arrays[f"{prefix}.running_var"]


class Dense:
    """Dense block: y = dropout(activation(batchnorm(x W + b)))."""

    def __init__(self, spec: DenseLayerSpec, rng: np.random.Generator, name: str = "dense"):
        self.spec = spec
        self.name = name
        scale = _init_scale(spec)
        self.W = Param(rng.normal(0.0, scale, size=(spec.in_dim, spec.out_dim)), name=f"{name}.W")
        self.b = Param(np.zeros(spec.out_dim), name=f"{name}.b")
        self.bn = BatchNorm(spec.out_dim, name=f"{name}.bn") if spec.batchnorm else None
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.in_dim:
            raise ShapeError(
                f"layer {self.name!r} expects input (batch, {self.spec.in_dim}), got {x.shape}"
            )
        z = x @ self.W.value + self.b.value
        h = self.bn.forward(z, train) if self.bn is not None else z
        a = activation_forward(h, self.spec.activation)
        mask = None
        if train and self.spec.dropout_p > 0.0:
            if rng is None:
                raise ValueError(f"layer {self.name!r}: train-mode dropout needs an rng")
            keep = 1.0 - self.spec.dropout_p
            mask = (rng.random(a.shape) >= self.spec.dropout_p).astype(np.float64) / keep
            out = a * mask
        else:
            out = a
        self._cache = (x, h, a, mask)
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Propagate grad to the input; accumulate parameter gradients."""
        if self._cache is None:
            raise RuntimeError(f"layer {self.name!r}: backward called before forward")
        x, pre_act, act_out, mask = self._cache
        if mask is not None:
            grad = grad * mask
        grad = activation_backward(grad, pre_act, act_out, self.spec.activation)
        if self.bn is not None:
            grad = self.bn.backward(grad)
        self.W.grad += x.T @ grad
        self.b.grad += grad.sum(axis=0)
        return grad @ self.W.value.T

    def params(self) -> list[Param]:
        out = [self.W, self.b]
        if self.bn is not None:
            out.extend(self.bn.params())
        return out

    def state_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        arrays = {f"{prefix}.W": self.W.value, f"{prefix}.b": self.b.value}
        if self.bn is not None:
            arrays.update(self.bn.state_arrays(f"{prefix}.bn"))
        return arrays

    def load_state(self, prefix: str, arrays: dict[str, np.ndarray]) -> None:
        self.W.value[...] = arrays[f"{prefix}.W"]
        self.b.value[...] = arrays[f"{prefix}.b"]
        if self.bn is not None:
            self.bn.load_state(f"{prefix}.bn", arrays)


def _init_scale(spec: DenseLayerSpec) -> float:
    # He-style for rectifiers, Glorot-style otherwise
    if isinstance(spec.activation, (Elu, LeakyRelu)):
        return float(np.sqrt(2.0 / spec.in_dim))
    return float(np.sqrt(1.0 / spec.in_dim))


class MLP:
    """A stack of dense blocks executed in order."""

    def __init__(self, specs: Sequence[DenseLayerSpec], rng: np.random.Generator, name: str = "mlp"):
        for a, b in zip(specs, specs[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"{name}: layer dims {a.out_dim} -> {b.in_dim} do not chain")
        self.name = name
        self.layers = [Dense(s, rng, name=f"{name}.{i}") for i, s in enumerate(specs)]

    @property
    def in_dim(self) -> int:
        return self.layers[0].spec.in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].spec.out_dim

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def params(self) -> list[Param]:
        out: list[Param] = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def specs_json(self) -> list[dict]:
        return [layer.spec.to_json() for layer in self.layers]

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            arrays.update(layer.state_arrays(f"{prefix}layer{i}"))
        return arrays

    def load_state(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for i, layer in enumerate(self.layers):
            layer.load_state(f"{prefix}layer{i}", arrays)

    @staticmethod
    def from_specs_json(specs: list[dict], rng: np.random.Generator, name: str = "mlp") -> "MLP":
        return MLP([DenseLayerSpec.from_json(d) for d in specs], rng, name=name)


def snapshot_state(arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Deep-copy a state mapping (used to retain best-epoch weights)."""
    return {k: v.copy() for k, v in arrays.items()}


def restore_state(live: dict[str, np.ndarray], saved: dict[str, np.ndarray]) -> None:
    for k, v in live.items():
        v[...] = saved[k]
