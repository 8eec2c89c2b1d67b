# AI/Pruning.py
# ======================================================================
# Dynamic structured pruning of the denoiser.
#
#   row_importance   ‖row‖₂ of a weight block (rows = output neurons)
#   build_masks      zero the ⌈ϱ·rows⌉ least important rows per layer
#   apply_masks      attach masks: θ' = θ ⊙ W on every forward pass
#   compact_export   drop masked rows + the consumer's matching columns
#
# Masks are recomputed every step from the stored (unmasked) weights, so a
# row masked now can come back later.  The output layer is never pruned.
# ======================================================================

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from NN.Layers import Linear

RATE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MaskSet:
    rate: float
    masks: dict[str, np.ndarray]          # layer key → 0/1 row mask

    def survivors(self) -> dict[str, int]:
        return {key: int(mask.sum()) for key, mask in self.masks.items()}

    def masked_fraction(self) -> float:
        total = sum(mask.size for mask in self.masks.values())
        if total == 0:
            return 0.0
        return 1.0 - sum(self.survivors().values()) / total

    def row_masks(self, net) -> dict[str, np.ndarray]:
        """Parameter name → row mask, the form the optimizer consumes."""
        out = {}
        for key, mask in self.masks.items():
            layer = net.layers[key]
            out[layer.weight.name] = mask
            out[layer.bias.name] = mask
        return out


def row_importance(weight) -> np.ndarray:
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 2:
        raise ValueError(f"row importance needs a 2-D block, got shape {weight.shape}")
    return np.sqrt((weight * weight).sum(axis=1))


def pruned_count(rows: int, rate: float) -> int:
    return int(math.ceil(rate * rows - RATE_SLACK))


def build_masks(net, rate: float) -> MaskSet:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"pruning rate must be in [0, 1), got {rate}")
    masks = {}
    for key, layer in net.prunable_layers().items():
        importance = row_importance(layer.weight.data)
        mask = np.ones(layer.rows)
        drop = pruned_count(layer.rows, rate)
        if drop:
            mask[np.argsort(importance, kind="stable")[:drop]] = 0.0
        masks[key] = mask
    return MaskSet(rate, masks)


def apply_masks(net, masks: MaskSet) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Attach `masks` to `net`; returns the masked (weight, bias) per layer."""
    layers = net.prunable_layers()
    for key, mask in masks.masks.items():
        layer = layers[key]
        if mask.shape != (layer.rows,):
            raise ValueError(f"mask for {key} has shape {mask.shape}, layer has {layer.rows} rows")
    masked = {}
    for key, mask in masks.masks.items():
        layer = layers[key]
        layer.row_mask = mask
        masked[key] = (layer.weight.data * mask[:, None], layer.bias.data * mask)
    return masked


def clear_masks(net) -> None:
    for layer in net.prunable_layers().values():
        layer.row_mask = None


def compact_export(net, masks: MaskSet):
    """Smaller network computing the same function as the masked dense one."""
    keep = {key: np.flatnonzero(mask) for key, mask in masks.masks.items()}
    consumers = net.consumers()
    weights = {key: layer.weight.data * (1.0 if layer.row_mask is None else layer.row_mask[:, None])
               for key, layer in net.layers.items()}
    biases = {key: layer.bias.data * (1.0 if layer.row_mask is None else layer.row_mask)
              for key, layer in net.layers.items()}

    for key, rows in keep.items():
        full = weights[key].shape[0]
        weights[key] = weights[key][rows]
        biases[key] = biases[key][rows]
        reader, offset = consumers[key]
        cols = np.ones(weights[reader].shape[1], dtype=bool)
        dropped = np.setdiff1d(np.arange(full), rows)
        cols[offset + dropped] = False
        weights[reader] = weights[reader][:, cols]

    layers = {key: Linear.from_arrays(weights[key], biases[key], f"{net.name}.{key}")
              for key in net.layers}
    return net.with_layers(layers)


def mask_stats(net, masks: MaskSet, step: int) -> list[dict]:
    """Per-layer survivor counts and importance percentiles for the mask log."""
    rows = []
    for key, layer in net.prunable_layers().items():
        p10, p50, p90 = np.percentile(row_importance(layer.weight.data), [10, 50, 90])
        rows.append({
            "step": step,
            "layer": key,
            "survivors": int(masks.masks[key].sum()),
            "importance_p10": float(p10),
            "importance_p50": float(p50),
            "importance_p90": float(p90),
        })
    return rows
