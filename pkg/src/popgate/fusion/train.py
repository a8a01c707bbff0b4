"""Two-phase training: experts first, then the gate (optionally jointly).

Phase 1 fits each branch alone on MSE against the scaled target. Phase 2
loads the trained branches and optimizes the composite loss with AdamW;
branches can be frozen (eval mode, no updates) or fine-tuned alongside the
gate. Both phases early-stop on validation MSE and return the best weights
seen, so phase 2 can never end worse than it started.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import PopgateError, ShapeError
from ..nn import Adam, AdamW, TrainControl, clip_grad_norm, mse_loss
from ..nn.layers import restore_state, snapshot_state
from ..seeding import rng_for
from .branches import MODALITIES, ExpertBranch
from .model import GatedEnsemble, LossWeights, ensemble_loss


@dataclass(frozen=True)
class Phase1Config:
    lr: float = 1e-4
    batch_size: int = 256
    max_epochs: int = 200
    patience: int = 25
    plateau_patience: int = 10
    clip_norm: float = 1.0
    seed: int = 46

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("phase-1 config needs lr > 0, batch_size >= 1, max_epochs >= 1")


@dataclass(frozen=True)
class Phase2Config:
    lr: float = 5e-6
    batch_size: int = 256
    max_epochs: int = 150
    patience: int = 25
    plateau_patience: int = 10
    clip_norm: float = 1.0
    weight_decay: float = 0.01
    freeze_branches: bool = False
    seed: int = 46

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("phase-2 config needs lr > 0, batch_size >= 1, max_epochs >= 1")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")


def _unit_targets(y: np.ndarray, where: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ValueError(f"{where}: empty target vector")
    lo, hi = float(y.min()), float(y.max())
    if lo < 0.0 or hi > 1.0:
        raise ValueError(
            f"{where}: targets must be min-max scaled to [0,1], got range [{lo:.4g}, {hi:.4g}]"
        )
    return y


def phase1_train(
    branch: ExpertBranch,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: Phase1Config,
) -> dict:
    """Fit one expert on MSE; restores the best-validation weights."""
    y_train = _unit_targets(y_train, f"{branch.modality} phase 1 train")
    y_val = _unit_targets(y_val, f"{branch.modality} phase 1 val")
    x_train = np.asarray(x_train, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    if x_train.shape[0] != y_train.shape[0]:
        raise ShapeError(f"train rows {x_train.shape[0]} != targets {y_train.shape[0]}")
    if x_val.shape[0] != y_val.shape[0]:
        raise ShapeError(f"val rows {x_val.shape[0]} != targets {y_val.shape[0]}")

    n = x_train.shape[0]
    yt_col = y_train.reshape(-1, 1)
    yv_col = y_val.reshape(-1, 1)
    opt = Adam(branch.params(), lr=cfg.lr)
    control = TrainControl(cfg.lr, patience=cfg.patience, plateau_patience=cfg.plateau_patience)
    best = snapshot_state(branch.state_arrays())
    history: dict = {"train_loss": [], "val_mse": []}
    tag = f"phase1-{branch.modality}"

    epochs_run = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng_for(cfg.seed, f"{tag}-shuffle-{epoch}").permutation(n)
        drop_rng = rng_for(cfg.seed, f"{tag}-dropout-{epoch}")
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            _, y_hat = branch.forward(x_train[idx], train=True, rng=drop_rng)
            loss, d_yhat = mse_loss(y_hat, yt_col[idx])
            branch.backward(None, d_yhat)
            clip_grad_norm(opt.params, cfg.clip_norm)
            opt.step()
            epoch_loss += loss * idx.size
        history["train_loss"].append(epoch_loss / n)

        _, yv_hat = branch.forward(x_val, train=False)
        val_mse, _ = mse_loss(yv_hat, yv_col)
        history["val_mse"].append(val_mse)
        opt.lr = control.update(val_mse)
        if control.improved:
            best = snapshot_state(branch.state_arrays())
        if control.should_stop:
            break

    restore_state(branch.state_arrays(), best)
    branch.trained = True
    history.update(
        best_epoch=control.best_epoch,
        best_val_mse=control.best_metric,
        epochs_run=epochs_run,
        lr_reductions=control.num_reductions,
    )
    return history


def phase2_train(
    model: GatedEnsemble,
    xs_train: dict[str, np.ndarray],
    y_train: np.ndarray,
    xs_val: dict[str, np.ndarray],
    y_val: np.ndarray,
    weights: LossWeights,
    cfg: Phase2Config,
) -> dict:
    """Train the gate (and optionally fine-tune branches) on the composite
    loss. Early stopping watches the plain ensemble MSE on validation, and
    the initial state counts as a candidate, so the returned model is never
    worse on validation than the phase-1 ensemble it started from."""
    untrained = [m for m in MODALITIES if not model.branches[m].trained]
    if untrained:
        raise PopgateError(
            f"phase 2 requires phase-1-trained branches; untrained: {untrained}"
        )
    y_train = _unit_targets(y_train, "phase 2 train")
    y_val = _unit_targets(y_val, "phase 2 val")
    n = y_train.shape[0]

    groups: list = [(model.gate.params(), 0.0)]
    if not cfg.freeze_branches:
        for m in MODALITIES:
            # the social inputs are narrow engagement counts; decaying that
            # branch hurts, so it trains decay-free
            wd = 0.0 if m == "social" else cfg.weight_decay
            groups.append((model.branches[m].params(), wd))
    opt = AdamW(groups, lr=cfg.lr)
    control = TrainControl(cfg.lr, patience=cfg.patience, plateau_patience=cfg.plateau_patience)

    initial = model.forward(xs_val, train=False)
    initial_val, _ = mse_loss(initial.yhat, y_val)
    control.update(initial_val)
    best = snapshot_state(model.state_arrays())
    history: dict = {"train_loss": [], "val_mse": [], "initial_val_mse": initial_val}

    epochs_run = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng_for(cfg.seed, f"phase2-shuffle-{epoch}").permutation(n)
        drop_rng = rng_for(cfg.seed, f"phase2-dropout-{epoch}")
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = {m: xs_train[m][idx] for m in MODALITIES}
            opt.zero_grad()
            out = model.forward(xb, train=True, rng=drop_rng, branch_train=not cfg.freeze_branches)
            breakdown, d_yhat, d_branch = ensemble_loss(y_train[idx], out, weights)
            model.backward(d_yhat, d_branch, into_branches=not cfg.freeze_branches)
            clip_grad_norm(opt.params, cfg.clip_norm)
            opt.step()
            epoch_loss += breakdown.total * idx.size
        history["train_loss"].append(epoch_loss / n)

        out = model.forward(xs_val, train=False)
        val_mse, _ = mse_loss(out.yhat, y_val)
        history["val_mse"].append(val_mse)
        opt.lr = control.update(val_mse)
        if control.improved:
            best = snapshot_state(model.state_arrays())
        if control.should_stop:
            break

    restore_state(model.state_arrays(), best)
    history.update(
        best_epoch=control.best_epoch,
        best_val_mse=control.best_metric,
        epochs_run=epochs_run,
        lr_reductions=control.num_reductions,
    )
    return history


@dataclass(frozen=True)
class GateReport:
    """Mixture-weight summary over a dataset."""

    alpha: np.ndarray  # (n, 3), rows sum to 1
    means: dict[str, float]  # modality -> mean weight
    groups: dict[str, dict[str, float]] | None  # optional per-group means

    def to_json(self) -> dict:
        d: dict = {"n": int(self.alpha.shape[0]), "means": self.means}
        if self.groups is not None:
            d["groups"] = self.groups
        return d


def gate_report(
    model: GatedEnsemble,
    xs: dict[str, np.ndarray],
    group_labels: Sequence | None = None,
) -> GateReport:
    """Per-sample mixture weights plus dataset means; `group_labels` (one
    per row, e.g. release decade) adds per-group means."""
    out = model.predict(xs)
    alpha = out.alpha
    means = {m: float(alpha[:, i].mean()) for i, m in enumerate(MODALITIES)}
    groups = None
    if group_labels is not None:
        labels = list(group_labels)
        if len(labels) != alpha.shape[0]:
            raise ShapeError(f"{len(labels)} group labels for {alpha.shape[0]} rows")
        groups = {}
        for key in sorted({str(v) for v in labels}):
            mask = np.array([str(v) == key for v in labels])
            groups[key] = {m: float(alpha[mask, i].mean()) for i, m in enumerate(MODALITIES)}
    return GateReport(alpha=alpha, means=means, groups=groups)
