"""Code-switched substitution: multilingual views of pivot-language sentences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import BilingualDictionary, ConfigError, NliExample

MIXED_LANG = "mixed"


@dataclass(frozen=True)
class CodeSwitchConfig:
    rate: float = 0.3
    fixed_lang: str | None = None  # None means a random language per word
    dictionaries: tuple[BilingualDictionary, ...] = ()
    salt: int = 0
    static_augmentation: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"code-switch rate must be in [0, 1], got {self.rate}")
        if self.rate > 0 and not self.dictionaries:
            raise ConfigError("code-switching with rate > 0 requires dictionaries")
        if self.fixed_lang is not None:
            if not any(d.target_lang == self.fixed_lang for d in self.dictionaries):
                raise ConfigError(f"no dictionary targets language {self.fixed_lang!r}")


@dataclass(frozen=True)
class SwitchedSentence:
    words: tuple[str, ...]
    # (position, target language) per replacement, for debug dumps
    replacements: tuple[tuple[int, str], ...] = ()

    def annotated(self) -> str:
        langs = dict(self.replacements)
        return " ".join(
            f"{w}({langs[i]})" if i in langs else w for i, w in enumerate(self.words)
        )


def _target_count(rate: float, length: int) -> int:
    # round-half-up of rate * length
    return int(math.floor(rate * length + 0.5))


def code_switch_sentence(
    words: tuple[str, ...] | list[str],
    cfg: CodeSwitchConfig,
    rng: np.random.Generator,
) -> SwitchedSentence:
    """Replace round(rate * len) words with dictionary translations.

    Positions are drawn without replacement; a drawn position whose word no
    configured dictionary covers is discarded and another is drawn, until the
    target count is reached or no coverable positions remain.  Output length
    always equals input length.
    """
    if not words:
        raise ConfigError("cannot code-switch an empty sentence")
    words = tuple(words)
    n_target = _target_count(cfg.rate, len(words))
    if n_target == 0:
        return SwitchedSentence(words)

    if cfg.fixed_lang is not None:
        dicts = tuple(d for d in cfg.dictionaries if d.target_lang == cfg.fixed_lang)
    else:
        dicts = cfg.dictionaries

    out = list(words)
    replacements: list[tuple[int, str]] = []
    order = rng.permutation(len(words))
    for pos in order:
        if len(replacements) == n_target:
            break
        pos = int(pos)
        covering = [d for d in dicts if words[pos] in d]
        if not covering:
            continue
        chosen = covering[int(rng.integers(len(covering)))]
        out[pos] = chosen.lookup(words[pos])
        replacements.append((pos, chosen.target_lang))
    replacements.sort()
    return SwitchedSentence(tuple(out), tuple(replacements))


def augment_question(example: NliExample, cfg: CodeSwitchConfig, seed: int) -> NliExample:
    """Independently code-switch premise and hypothesis; label is preserved and
    the language tag becomes "mixed".  Deterministic per (seed, salt)."""
    rng = np.random.default_rng([seed, cfg.salt])
    premise = code_switch_sentence(example.premise, cfg, rng).words
    hypothesis = code_switch_sentence(example.hypothesis, cfg, rng).words
    return NliExample(premise, hypothesis, example.label, MIXED_LANG)


def derive_seed(base_seed: int, example_index: int, epoch: int = 0) -> int:
    """Stable per-example (and optionally per-epoch) augmentation seed."""
    ss = np.random.SeedSequence([base_seed, example_index, epoch])
    return int(ss.generate_state(1)[0])
