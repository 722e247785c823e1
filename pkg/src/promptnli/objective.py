"""Verbalizer-averaged cross-entropy, symmetric KL consistency, and their
weighted combination.  All functions accept torch tensors and stay
differentiable so they can drive training directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch

from .data import ConfigError, Label
from .verbalizer import MultilingualVerbalizer

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    orig: float = 1.0
    aug: float = 1.0
    kld: float = 1.0

    def __post_init__(self):
        for name, value in (("orig", self.orig), ("aug", self.aug), ("kld", self.kld)):
            if not (value >= 0 and value == value):
                raise ConfigError(f"loss weight {name} must be finite and >= 0")


@dataclass
class LossBreakdown:
    orig: torch.Tensor
    aug: torch.Tensor
    kld: torch.Tensor
    total: torch.Tensor

    def floats(self) -> tuple[float, float, float, float]:
        return (
            float(self.orig.detach()),
            float(self.aug.detach()),
            float(self.kld.detach()),
            float(self.total.detach()),
        )


def _as_tensor(dist) -> torch.Tensor:
    if isinstance(dist, torch.Tensor):
        return dist
    return torch.as_tensor(dist, dtype=torch.float64)


def instance_ce(dist, label: Label, mv: MultilingualVerbalizer) -> torch.Tensor:
    """Cross-entropy of one mask distribution against the label's answer words,
    averaged over the verbalizer's languages."""
    dist = _as_tensor(dist)
    idxs = torch.tensor(mv.answer_indices(label), dtype=torch.long)
    picked = dist[idxs].clamp_min(PROB_FLOOR)
    return -picked.log().mean()


def batch_ce(dists, labels: Sequence[Label], mv: MultilingualVerbalizer) -> torch.Tensor:
    """Mean of per-instance cross-entropies (non-negative)."""
    if len(dists) != len(labels):
        raise ValueError(f"got {len(dists)} distributions but {len(labels)} labels")
    losses = [instance_ce(d, lab, mv) for d, lab in zip(dists, labels)]
    return torch.stack(losses).mean()


def kl_consistency(p, q) -> torch.Tensor:
    """Symmetric KL divergence KL(p||q) + KL(q||p) over the full vocabulary."""
    p, q = _as_tensor(p), _as_tensor(q)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {tuple(p.shape)} vs {tuple(q.shape)}")
    p = p.clamp_min(PROB_FLOOR)
    q = q.clamp_min(PROB_FLOOR)
    ratio = (p / q).log()
    return (p * ratio).sum() + (-q * ratio).sum()


def restrict_to_answers(dist, mv: MultilingualVerbalizer) -> torch.Tensor:
    """Renormalized restriction of a distribution to the union of the
    verbalizer's answer indices (the alternative KL support)."""
    dist = _as_tensor(dist)
    idxs = sorted({i for v in mv.verbalizers.values() for i in v.indices.values()})
    sub = dist[torch.tensor(idxs, dtype=torch.long)].clamp_min(PROB_FLOOR)
    return sub / sub.sum()


def total_loss(
    orig_dists,
    aug_dists,
    labels: Sequence[Label],
    mv: MultilingualVerbalizer,
    weights: LossWeights,
    kl_support: str = "vocab",
) -> LossBreakdown:
    """Weighted combination of original CE, augmented CE, and the batch-mean
    symmetric KL between each original/augmented pair."""
    if not (len(orig_dists) == len(aug_dists) == len(labels)):
        raise ValueError("original, augmented, and label lists must align")
    if kl_support not in ("vocab", "answers"):
        raise ConfigError(f"unknown kl_support {kl_support!r}")
    l_orig = batch_ce(orig_dists, labels, mv)
    l_aug = batch_ce(aug_dists, labels, mv)
    kls = []
    for p, q in zip(orig_dists, aug_dists):
        if kl_support == "answers":
            p, q = restrict_to_answers(p, mv), restrict_to_answers(q, mv)
        kls.append(kl_consistency(p, q))
    l_kld = torch.stack(kls).mean()
    total = weights.orig * l_orig + weights.aug * l_aug + weights.kld * l_kld
    return LossBreakdown(l_orig, l_aug, l_kld, total)
