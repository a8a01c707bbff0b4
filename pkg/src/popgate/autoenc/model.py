"""Symmetric bottleneck autoencoders with latent-norm regularization.

Loss per group: L = MSE(x, x̂) + λ · mean_over_batch ‖z_row‖², with
λ = 0.001 · 128 / d_enc so narrower bottlenecks are regularized harder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError
from ..nn import Dense, DenseLayerSpec, Elu, Identity, MLP
from ..nn.layers import Param, snapshot_state

AE_DROPOUT = 0.05
AE_ELU_ALPHA = 0.1


def plan_architecture(d: int) -> list[int]:
    """Encoder hidden widths for an input of width d.

    Wide inputs taper through three floors of [d/2, d/3, d/5]; mid-size
    (2000–4000 inclusive) through [d/2, d/4]; narrow through [d/2].
    """
    if d < 2:
        raise ValueError(f"input dim must be >= 2, got {d}")
    if d > 4000:
        return [d // 2, d // 3, d // 5]
    if d >= 2000:
        return [d // 2, d // 4]
    return [d // 2]


def lambda_for(d_enc: int) -> float:
    """Latent penalty weight, inversely proportional to bottleneck width."""
    if d_enc < 1:
        raise ValueError(f"bottleneck dim must be >= 1, got {d_enc}")
    return 0.001 * 128.0 / d_enc


def _hidden_spec(a: int, b: int) -> DenseLayerSpec:
    return DenseLayerSpec(a, b, Elu(AE_ELU_ALPHA), batchnorm=True, dropout_p=AE_DROPOUT)


class Autoencoder:
    """Encoder (hiddens -> linear bottleneck) and mirrored decoder
    (hiddens reversed -> linear output). Hidden layers are ELU(0.1) with
    batchnorm and dropout; bottleneck and output are plain linear maps so
    embeddings and reconstructions span all of R."""

    def __init__(self, d: int, d_enc: int, rng: np.random.Generator, name: str = "ae"):
        if d_enc >= d:
            raise ValueError(f"{name}: bottleneck {d_enc} must be < input dim {d}")
        hidden = plan_architecture(d)
        self.d = d
        self.d_enc = d_enc
        self.name = name
        enc_dims = [d] + hidden
        enc_specs = [_hidden_spec(a, b) for a, b in zip(enc_dims, enc_dims[1:])]
        enc_specs.append(DenseLayerSpec(hidden[-1], d_enc, Identity()))
        dec_dims = [d_enc] + hidden[::-1]
        dec_specs = [_hidden_spec(a, b) for a, b in zip(dec_dims, dec_dims[1:])]
        dec_specs.append(DenseLayerSpec(hidden[0], d, Identity()))
        self.encoder = MLP(enc_specs, rng, name=f"{name}.enc")
        self.decoder = MLP(dec_specs, rng, name=f"{name}.dec")

    def encode(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        return self.encoder.forward(x, train=train, rng=rng)

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> tuple[np.ndarray, np.ndarray]:
        z = self.encoder.forward(x, train=train, rng=rng)
        return self.decoder.forward(z, train=train, rng=rng), z

    def backward(self, d_xhat: np.ndarray, d_z: np.ndarray) -> np.ndarray:
        """Backprop both loss paths: reconstruction through the decoder, plus
        the direct latent-penalty gradient on z."""
        gz = self.decoder.backward(d_xhat) + d_z
        return self.encoder.backward(gz)

    def params(self) -> list[Param]:
        return self.encoder.params() + self.decoder.params()

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        arrays.update(self.encoder.state_arrays("enc."))
        arrays.update(self.decoder.state_arrays("dec."))
        return arrays

    def snapshot(self) -> dict[str, np.ndarray]:
        return snapshot_state(self.state_arrays())

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.encoder.load_state(arrays, "enc.")
        self.decoder.load_state(arrays, "dec.")

    def hidden_dims(self) -> list[int]:
        return [layer.spec.out_dim for layer in self.encoder.layers[:-1]]


@dataclass(frozen=True)
class AELossTerms:
    recon: float
    latent_penalty: float
    lambda_k: float

    @property
    def total(self) -> float:
        return self.recon + self.latent_penalty


def ae_loss(
    x: np.ndarray, x_hat: np.ndarray, z: np.ndarray, lambda_k: float
) -> tuple[AELossTerms, np.ndarray, np.ndarray]:
    """Loss terms plus gradients (d_total/d_x̂, d_total/d_z).

    recon is the elementwise MSE; the latent penalty averages ‖z_row‖² over
    the batch so λ keeps one scale regardless of batch size.
    """
    if x.shape != x_hat.shape:
        raise ShapeError(f"reconstruction shape {x_hat.shape} != input {x.shape}")
    if z.ndim != 2 or z.shape[0] != x.shape[0]:
        raise ShapeError(f"bottleneck batch {z.shape} does not match input batch {x.shape}")
    diff = x_hat - x
    recon = float(np.mean(diff * diff))
    batch = z.shape[0]
    penalty = lambda_k * float(np.sum(z * z)) / batch
    d_xhat = 2.0 * diff / diff.size
    d_z = 2.0 * lambda_k * z / batch
    return AELossTerms(recon, penalty, lambda_k), d_xhat, d_z
