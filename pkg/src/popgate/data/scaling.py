"""Column scalers fit on the train split only: zscore, minmax, constant(k)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigError, ShapeError

KINDS = ("zscore", "minmax", "constant")


@dataclass(frozen=True)
class ScalerParams:
    kind: str
    center: np.ndarray  # mean (zscore) / min (minmax) / zeros (constant)
    scale: np.ndarray  # std / (max-min) / 1s — degenerate columns hold 1.0
    degenerate: np.ndarray  # bool mask of zero-spread columns, mapped to 0
    k: float = 1.0  # constant multiplier

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "degenerate": self.degenerate.tolist(),
            "k": self.k,
        }

    @staticmethod
    def from_json(d: dict) -> "ScalerParams":
        return ScalerParams(
            kind=d["kind"],
            center=np.asarray(d["center"], dtype=np.float64),
            scale=np.asarray(d["scale"], dtype=np.float64),
            degenerate=np.asarray(d["degenerate"], dtype=bool),
            k=float(d["k"]),
        )


def scaler_fit(train: np.ndarray, kind: str, k: float | None = None) -> ScalerParams:
    """Fit per-column statistics on train rows only.

    Zero-spread columns get scale 1 and a degeneracy flag; their transform
    output is exactly 0 (no NaN leaks).
    """
    X = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if kind == "zscore":
        center = X.mean(axis=0)
        spread = X.std(axis=0)
    elif kind == "minmax":
        center = X.min(axis=0)
        spread = X.max(axis=0) - center
    elif kind == "constant":
        if k is None:
            raise ConfigError("constant scaler needs a multiplier k")
        d = X.shape[1]
        return ScalerParams("constant", np.zeros(d), np.ones(d), np.zeros(d, dtype=bool), float(k))
    else:
        raise ConfigError(f"unknown scaler kind {kind!r}; expected one of {KINDS}")
    degenerate = spread == 0.0
    scale = np.where(degenerate, 1.0, spread)
    return ScalerParams(kind, center, scale, degenerate)


def scaler_apply(params: ScalerParams, rows: np.ndarray) -> np.ndarray:
    if params is None:
        raise RuntimeError("scaler has not been fit")
    X = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if X.shape[1] != params.center.size:
        raise ShapeError(f"scaler fit on {params.center.size} columns, got {X.shape[1]}")
    if params.kind == "constant":
        return X * params.k
    out = (X - params.center) / params.scale
    out[:, params.degenerate] = 0.0
    return out


def scaler_invert(params: ScalerParams, rows: np.ndarray) -> np.ndarray:
    """Inverse transform; degenerate columns recover the train constant."""
    if params is None:
        raise RuntimeError("scaler has not been fit")
    X = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if params.kind == "constant":
        return X / params.k
    return X * params.scale + params.center


class Scaler:
    """Stateful wrapper: fit on train once, then transform anywhere."""

    def __init__(self, kind: str, k: float | None = None):
        if kind not in KINDS:
            raise ConfigError(f"unknown scaler kind {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.k = k
        self.params: ScalerParams | None = None

    def fit(self, train: np.ndarray) -> "Scaler":
        self.params = scaler_fit(train, self.kind, self.k)
        return self

    def transform(self, rows: np.ndarray) -> np.ndarray:
        if self.params is None:
            raise RuntimeError("scaler has not been fit")
        return scaler_apply(self.params, rows)

    def inverse_transform(self, rows: np.ndarray) -> np.ndarray:
        if self.params is None:
            raise RuntimeError("scaler has not been fit")
        return scaler_invert(self.params, rows)
