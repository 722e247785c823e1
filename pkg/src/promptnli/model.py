"""A small trainable masked-language encoder whose embedding table hosts the
soft-prompt vectors, with an MLM head over the full vocabulary.

Everything runs in float64 on CPU so gradient checks against central finite
differences are meaningful.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .data import ConfigError
from .prompting import ClozeQuestion
from .vocab import SPECIALS, Vocabulary

LN_EPS = 1e-5
INIT_SCALE = 0.1
CHECKPOINT_MAGIC = b"CLZMLM01"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    dim: int = 64
    layers: int = 2
    heads: int = 4
    ffn_dim: int = 128
    max_len: int = 256
    tied_head: bool = True
    num_soft_slots: int = 16
    prompt_init: str = "vocab_mean"  # or "random"

    def __post_init__(self):
        if self.dim % self.heads != 0:
            raise ConfigError(
                f"dim={self.dim} must be divisible by heads={self.heads}"
            )
        if self.prompt_init not in ("vocab_mean", "random"):
            raise ConfigError(f"unknown prompt_init {self.prompt_init!r}")


def sinusoidal_positions(max_len: int, dim: int) -> torch.Tensor:
    pos = np.arange(max_len)[:, None]
    i = np.arange(dim // 2)[None, :]
    angles = pos / np.power(10000.0, 2 * i / dim)
    enc = np.zeros((max_len, dim))
    enc[:, 0::2] = np.sin(angles)
    enc[:, 1::2] = np.cos(angles)
    return torch.tensor(enc, dtype=torch.float64)


class EncoderLayer(nn.Module):
    """Pre-norm transformer encoder layer with ReLU feed-forward."""

    def __init__(self, dim: int, heads: int, ffn_dim: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.o_proj = nn.Linear(dim, dim)
        self.norm1 = nn.LayerNorm(dim, eps=LN_EPS)
        self.ff1 = nn.Linear(dim, ffn_dim)
        self.ff2 = nn.Linear(ffn_dim, dim)
        self.norm2 = nn.LayerNorm(dim, eps=LN_EPS)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor | None) -> torch.Tensor:
        # x: [B, T, d]; pad_mask: [B, T] bool, True where padded
        b, t, d = x.shape
        h = self.norm1(x)
        q = self.q_proj(h).view(b, t, self.heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(h).view(b, t, self.heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(h).view(b, t, self.heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / self.head_dim**0.5
        if pad_mask is not None:
            scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        ctx = (attn @ v).transpose(1, 2).reshape(b, t, d)
        x = x + self.o_proj(ctx)
        x = x + self.ff2(torch.relu(self.ff1(self.norm2(x))))
        return x


class ClozeEncoder(nn.Module):
    """Embedding table (with reserved soft-prompt rows), sinusoidal positions,
    encoder stack, and an MLM head producing the mask-token distribution."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.embedding = nn.Embedding(cfg.vocab_size, cfg.dim)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.dim))
        self.layers = nn.ModuleList(
            EncoderLayer(cfg.dim, cfg.heads, cfg.ffn_dim) for _ in range(cfg.layers)
        )
        if cfg.tied_head:
            self.head = None
        else:
            self.head = nn.Linear(cfg.dim, cfg.vocab_size, bias=False)
        self.double()

        # Soft-prompt rows live at the reserved slot ids (see Vocabulary.build).
        slot_start = len(SPECIALS)
        slot_ids = torch.arange(slot_start, slot_start + cfg.num_soft_slots)
        self.register_buffer("slot_ids", slot_ids)
        self.prompt_trainable = True
        self._train_scope = "all"
        self.embedding.weight.register_hook(self._mask_embedding_grad)

        self._init_parameters(seed)
        self.init_soft_prompts(seed=seed)

    # -- initialization ----------------------------------------------------

    def _init_parameters(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, p in self.named_parameters():
                if "norm" in name:
                    if name.endswith("weight"):
                        p.fill_(1.0)
                    else:
                        p.zero_()
                elif name.endswith("bias"):
                    p.zero_()
                else:
                    p.copy_(
                        INIT_SCALE
                        * torch.randn(p.shape, generator=gen, dtype=torch.float64)
                    )

    def init_soft_prompts(self, seed: int = 0) -> None:
        """Overwrite every prompt row with the mean lexicon embedding, or with
        fresh random vectors when prompt_init is "random"."""
        slot_start = int(self.slot_ids[0])
        lexicon_start = slot_start + self.cfg.num_soft_slots
        with torch.no_grad():
            if self.cfg.prompt_init == "vocab_mean":
                mean = self.embedding.weight[lexicon_start:].mean(dim=0)
                self.embedding.weight[self.slot_ids] = mean
            else:
                gen = torch.Generator().manual_seed(seed + 1)
                self.embedding.weight[self.slot_ids] = INIT_SCALE * torch.randn(
                    (self.cfg.num_soft_slots, self.cfg.dim),
                    generator=gen,
                    dtype=torch.float64,
                )

    # -- trainability ------------------------------------------------------

    def set_prompt_trainable(self, flag: bool) -> None:
        self.prompt_trainable = bool(flag)

    def set_train_scope(self, scope: str) -> None:
        if scope not in ("all", "prompts-only"):
            raise ConfigError(f"unknown train scope {scope!r}")
        self._train_scope = scope
        for name, p in self.named_parameters():
            if name == "embedding.weight":
                p.requires_grad_(True)
            else:
                p.requires_grad_(scope == "all")

    def _mask_embedding_grad(self, grad: torch.Tensor) -> torch.Tensor:
        grad = grad.clone()
        if not self.prompt_trainable:
            grad[self.slot_ids] = 0.0
        if self._train_scope == "prompts-only":
            keep = torch.zeros(grad.shape[0], dtype=torch.bool)
            if self.prompt_trainable:
                keep[self.slot_ids] = True
            grad[~keep] = 0.0
        return grad

    # -- forward -----------------------------------------------------------

    def forward(
        self,
        token_ids: torch.Tensor,
        mask_pos: torch.Tensor,
        pad_mask: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (mask-token probabilities [B, V], mask hidden states [B, d])."""
        if token_ids.dim() == 1:
            token_ids = token_ids[None]
            mask_pos = mask_pos.reshape(1)
        b, t = token_ids.shape
        if t > self.cfg.max_len:
            raise ConfigError(f"sequence length {t} exceeds max_len {self.cfg.max_len}")
        if int(token_ids.max()) >= self.cfg.vocab_size or int(token_ids.min()) < 0:
            raise ValueError("token id out of vocabulary range")
        # sqrt(d) token scaling keeps embeddings comparable to the unit-scale
        # positional encodings
        x = self.embedding(token_ids) * self.cfg.dim**0.5 + self.positions[:t]
        for layer in self.layers:
            x = layer(x, pad_mask)
        h_mask = x[torch.arange(b), mask_pos]
        if self.head is None:
            logits = h_mask @ self.embedding.weight.T
        else:
            logits = self.head(h_mask)
        return torch.softmax(logits, dim=-1), h_mask


def mask_distribution(
    model: ClozeEncoder, question: ClozeQuestion
) -> tuple[np.ndarray, np.ndarray]:
    """Single-question inference: (probabilities over vocab, mask hidden state)."""
    ids = torch.tensor(question.token_ids, dtype=torch.long)
    pos = torch.tensor([question.mask_pos], dtype=torch.long)
    with torch.no_grad():
        probs, h = model(ids, pos)
    return probs[0].numpy(), h[0].numpy()


def batch_forward(
    model: ClozeEncoder, questions: list[ClozeQuestion], vocab: Vocabulary
) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad a batch of questions and run one forward pass."""
    max_t = max(len(q.token_ids) for q in questions)
    ids = torch.full((len(questions), max_t), vocab.pad_id, dtype=torch.long)
    pad = torch.ones((len(questions), max_t), dtype=torch.bool)
    pos = torch.zeros(len(questions), dtype=torch.long)
    for i, q in enumerate(questions):
        ids[i, : len(q.token_ids)] = torch.tensor(q.token_ids, dtype=torch.long)
        pad[i, : len(q.token_ids)] = False
        pos[i] = q.mask_pos
    return model(ids, pos, pad)


# ---------------------------------------------------------------------------
# Checkpoints: magic, version, config JSON, then parameter tensors in
# state_dict order as raw little-endian float64.
# ---------------------------------------------------------------------------


class CheckpointError(Exception):
    pass


def save_checkpoint(model: ClozeEncoder, path: str | Path) -> None:
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<H", CHECKPOINT_VERSION))
    cfg_bytes = json.dumps(asdict(model.cfg), sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(cfg_bytes)))
    buf.write(cfg_bytes)
    for name, p in sorted(model.state_dict().items()):
        if name in ("positions", "slot_ids"):
            continue
        arr = p.detach().numpy().astype("<f8")
        buf.write(struct.pack("<I", arr.nbytes))
        buf.write(arr.tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(
    path: str | Path, expected: ModelConfig | None = None
) -> ClozeEncoder:
    raw = Path(path).read_bytes()
    buf = io.BytesIO(raw)
    if buf.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes, not a model checkpoint")
    (version,) = struct.unpack("<H", buf.read(2))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", buf.read(4))
    cfg_dict = json.loads(buf.read(cfg_len).decode("utf-8"))
    cfg = ModelConfig(**cfg_dict)
    if expected is not None:
        for key, value in asdict(expected).items():
            if cfg_dict.get(key) != value:
                raise CheckpointError(
                    f"checkpoint config mismatch on {key!r}: "
                    f"{cfg_dict.get(key)!r} != {value!r}"
                )
    model = ClozeEncoder(cfg, seed=0)
    state = model.state_dict()
    with torch.no_grad():
        for name, p in sorted(state.items()):
            if name in ("positions", "slot_ids"):
                continue
            header = buf.read(4)
            if len(header) < 4:
                raise CheckpointError(f"{path}: truncated checkpoint")
            (nbytes,) = struct.unpack("<I", header)
            data = buf.read(nbytes)
            if len(data) < nbytes:
                raise CheckpointError(f"{path}: truncated checkpoint")
            arr = np.frombuffer(data, dtype="<f8").reshape(tuple(p.shape))
            p.copy_(torch.from_numpy(arr.copy()))
    return model


def state_digest(model: ClozeEncoder) -> bytes:
    """Stable digest of all parameters, for no-mutation assertions."""
    import hashlib

    h = hashlib.sha256()
    for name, p in sorted(model.state_dict().items()):
        h.update(name.encode())
        h.update(p.detach().numpy().astype("<f8").tobytes())
    return h.digest()
