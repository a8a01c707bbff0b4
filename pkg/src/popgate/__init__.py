"""Multimodal song-popularity prediction toolkit.

Pieces: a small dense-network engine with hand-derived gradients (`popgate.nn`),
listener-trajectory feature extraction from play logs (`popgate.ctd`),
group-wise autoencoder compression of wide audio descriptors (`popgate.autoenc`),
three modality experts fused through a learnable softmax gate (`popgate.fusion`),
dataset plumbing (`popgate.data`), and a reproducible CLI (`popgate.cli`).
"""

__version__ = "0.1.0"
