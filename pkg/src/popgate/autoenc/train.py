"""Per-group autoencoder training and the trained compressor ensemble."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..data.scaling import ScalerParams, scaler_apply, scaler_fit
from ..exceptions import ConfigError, MissingInputError, ShapeError
from ..nn import Adam, TrainControl, clip_grad_norm, load_checkpoint, save_checkpoint
from ..seeding import derive_seed, rng_for
from .groups import FeatureGroup, registry_from_json, registry_hash, registry_to_json
from .model import Autoencoder, ae_loss, lambda_for


def rel_mse(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Unexplained-variance fraction: Σ(x−x̂)² / Σ(x−x̄)², x̄ = column means."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ShapeError(f"rel_mse shapes differ: {x.shape} vs {x_hat.shape}")
    sst = float(np.sum((x - x.mean(axis=0)) ** 2))
    if sst == 0.0:
        raise ValueError("rel_mse undefined for zero-variance input")
    return float(np.sum((x - x_hat) ** 2)) / sst


@dataclass(frozen=True)
class AETrainConfig:
    lr: float = 1e-4
    batch_size: int = 256
    max_epochs: int = 200
    clip_norm: float = 1.0
    patience: int = 25
    plateau_patience: int = 10
    val_fraction: float = 0.1
    seed: int = 46


def train_group_autoencoder(
    group: FeatureGroup, data: np.ndarray, cfg: AETrainConfig = AETrainConfig()
) -> tuple[Autoencoder, ScalerParams, dict]:
    """Standardize one group's columns, train its autoencoder, return the
    best-validation model plus the fitted scaler and a history dict.

    `data` holds only this group's training-split columns (width group.d);
    a fixed 10% of its rows are held out for validation/early stopping.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != group.d:
        raise ShapeError(f"group {group.name!r} expects width {group.d}, got {X.shape}")
    n = X.shape[0]
    n_val = max(1, int(round(cfg.val_fraction * n)))
    if n - n_val < 1:
        raise ValueError(f"group {group.name!r}: {n} rows leave no training data")
    perm = rng_for(cfg.seed, f"ae-val-{group.name}").permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    scaler = scaler_fit(X[train_idx], "zscore")
    Xtr = scaler_apply(scaler, X[train_idx])
    Xva = scaler_apply(scaler, X[val_idx])

    model = Autoencoder(group.d, group.d_enc, rng_for(cfg.seed, f"ae-init-{group.name}"), name=group.name)
    lam = lambda_for(group.d_enc)
    opt = Adam(model.params(), lr=cfg.lr)
    control = TrainControl(lr=cfg.lr, patience=cfg.patience, plateau_patience=cfg.plateau_patience)
    best_state = model.snapshot()
    history: dict = {"train_loss": [], "val_loss": [], "lambda": lam}

    for epoch in range(cfg.max_epochs):
        order = rng_for(cfg.seed, f"ae-shuffle-{group.name}-{epoch}").permutation(len(train_idx))
        drop_rng = rng_for(cfg.seed, f"ae-dropout-{group.name}-{epoch}")
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            xb = Xtr[order[lo : lo + cfg.batch_size]]
            opt.zero_grad()
            x_hat, z = model.forward(xb, train=True, rng=drop_rng)
            terms, d_xhat, d_z = ae_loss(xb, x_hat, z, lam)
            model.backward(d_xhat, d_z)
            clip_grad_norm(opt.params, cfg.clip_norm)
            opt.step()
            epoch_loss += terms.total * xb.shape[0]
        history["train_loss"].append(epoch_loss / len(train_idx))

        xv_hat, zv = model.forward(Xva, train=False)
        val_terms, _, _ = ae_loss(Xva, xv_hat, zv, lam)
        history["val_loss"].append(val_terms.total)
        opt.lr = control.update(val_terms.total)
        if control.improved:
            best_state = model.snapshot()
        if control.should_stop:
            break

    model.load_state(best_state)
    xv_hat, _ = model.forward(Xva, train=False)
    history["val_relmse"] = rel_mse(Xva, xv_hat)
    history["best_epoch"] = control.best_epoch
    history["epochs_run"] = control.epoch + 1
    return model, scaler, history


class CompressorEnsemble:
    """Trained per-group encoders applied slice-by-slice and concatenated in
    registry order."""

    def __init__(
        self,
        registry: Sequence[FeatureGroup],
        models: Mapping[str, Autoencoder],
        scalers: Mapping[str, ScalerParams],
        seed: int = 46,
    ):
        missing = [g.name for g in registry if g.name not in models or g.name not in scalers]
        if missing:
            raise ConfigError(f"ensemble missing trained groups: {missing}")
        self.registry = tuple(registry)
        self.models = dict(models)
        self.scalers = dict(scalers)
        self.seed = seed

    @property
    def output_dim(self) -> int:
        return sum(g.d_enc for g in self.registry)

    def compress(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        blocks = []
        for g in self.registry:
            if X.ndim != 2 or X.shape[1] < g.start + g.d:
                raise ShapeError(
                    f"group {g.name!r} needs columns [{g.start},{g.start + g.d}), "
                    f"but input has shape {X.shape}"
                )
            scaled = scaler_apply(self.scalers[g.name], X[:, g.cols])
            blocks.append(self.models[g.name].encode(scaled, train=False))
        return np.hstack(blocks)

    def save(self, out_dir: str | Path, histories: Mapping[str, dict] | None = None) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "registry": registry_to_json(self.registry),
            "registry_hash": registry_hash(self.registry),
            "seed": self.seed,
            "groups": {},
        }
        for g in self.registry:
            model = self.models[g.name]
            scaler = self.scalers[g.name]
            arrays = model.state_arrays()
            arrays["scaler.center"] = scaler.center
            arrays["scaler.scale"] = scaler.scale
            arrays["scaler.degenerate"] = scaler.degenerate.astype(np.uint8)
            meta = {
                "group": {"name": g.name, "start": g.start, "d": g.d, "d_enc": g.d_enc},
                "seed": derive_seed(self.seed, f"ae-init-{g.name}"),
                "encoder_specs": model.encoder.specs_json(),
                "decoder_specs": model.decoder.specs_json(),
            }
            save_checkpoint(out / f"{g.name}.npz", arrays, meta)
            entry = {"checkpoint": f"{g.name}.npz"}
            if histories and g.name in histories:
                entry["val_relmse"] = histories[g.name].get("val_relmse")
            manifest["groups"][g.name] = entry
        (out / "ensemble.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    @staticmethod
    def load(in_dir: str | Path) -> "CompressorEnsemble":
        path = Path(in_dir) / "ensemble.json"
        if not path.exists():
            raise MissingInputError(f"ensemble manifest not found: {path}")
        manifest = json.loads(path.read_text())
        registry = registry_from_json(manifest["registry"])
        if registry_hash(registry) != manifest["registry_hash"]:
            raise ConfigError(f"registry hash mismatch in {path}")
        models, scalers = {}, {}
        for g in registry:
            arrays, meta = load_checkpoint(Path(in_dir) / manifest["groups"][g.name]["checkpoint"])
            model = Autoencoder(g.d, g.d_enc, np.random.default_rng(0), name=g.name)
            model.load_state(arrays)
            models[g.name] = model
            scalers[g.name] = ScalerParams(
                kind="zscore",
                center=arrays["scaler.center"],
                scale=arrays["scaler.scale"],
                degenerate=arrays["scaler.degenerate"].astype(bool),
            )
        return CompressorEnsemble(registry, models, scalers, seed=manifest["seed"])
