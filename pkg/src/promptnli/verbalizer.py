"""Label-to-answer-word maps per language, and mask-distribution reduction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import BilingualDictionary, ConfigError, Label, LABEL_ORDER
from .vocab import Vocabulary

ENGLISH_ANSWER_WORDS = {
    Label.ENTAILMENT: "yes",
    Label.CONTRADICTION: "no",
    Label.NEUTRAL: "maybe",
}


class VerbalizerError(Exception):
    pass


@dataclass(frozen=True)
class Verbalizer:
    lang: str
    indices: dict[Label, int]

    def __post_init__(self):
        if set(self.indices) != set(LABEL_ORDER):
            raise VerbalizerError("a verbalizer must map all three labels")
        if len(set(self.indices.values())) != 3:
            raise VerbalizerError(
                f"verbalizer for {self.lang!r} maps two labels to one index"
            )

    def __getitem__(self, label: Label) -> int:
        return self.indices[label]


@dataclass(frozen=True)
class MultilingualVerbalizer:
    verbalizers: dict[str, Verbalizer]

    def __post_init__(self):
        if not self.verbalizers:
            raise VerbalizerError("multilingual verbalizer must be non-empty")

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(self.verbalizers)

    def answer_index(self, lang: str, label: Label) -> int:
        if lang not in self.verbalizers:
            raise VerbalizerError(f"no verbalizer for language {lang!r}")
        return self.verbalizers[lang][label]

    def answer_indices(self, label: Label) -> list[int]:
        return [v[label] for v in self.verbalizers.values()]


def _word_index(word: str, vocab: Vocabulary) -> int:
    if word not in vocab:
        raise ConfigError(f"answer word {word!r} is missing from the vocabulary")
    return vocab.id(word)


def default_english(vocab: Vocabulary, lang: str = "en") -> Verbalizer:
    """The pivot verbalizer: yes / no / maybe."""
    return Verbalizer(
        lang, {lab: _word_index(w, vocab) for lab, w in ENGLISH_ANSWER_WORDS.items()}
    )


def translate_verbalizer(
    base: Verbalizer, dictionary: BilingualDictionary, vocab: Vocabulary
) -> Verbalizer:
    """Translate each answer word through a bilingual dictionary and re-resolve."""
    indices: dict[Label, int] = {}
    for label, idx in base.indices.items():
        word = vocab.word(idx)
        translated = dictionary.lookup(word)
        if translated is None:
            raise VerbalizerError(
                f"dictionary {base.lang}->{dictionary.target_lang} does not cover "
                f"answer word {word!r}"
            )
        indices[label] = _word_index(translated, vocab)
    return Verbalizer(dictionary.target_lang, indices)


def class_scores(
    dist: np.ndarray,
    mv: MultilingualVerbalizer,
    lang: str | None = None,
) -> dict[Label, float]:
    """Reduce a mask-token distribution to one score per label.

    With ``lang=None`` the score averages the answer-word probabilities over
    every language in the verbalizer; otherwise only that language is read.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if not np.isclose(dist.sum(), 1.0, atol=1e-6):
        raise ValueError("distribution must sum to 1 within 1e-6")
    scores: dict[Label, float] = {}
    for label in LABEL_ORDER:
        if lang is None:
            idxs = mv.answer_indices(label)
            scores[label] = float(sum(dist[i] for i in idxs) / len(idxs))
        else:
            scores[label] = float(dist[mv.answer_index(lang, label)])
    return scores


def argmax_label(scores: dict[Label, float]) -> Label:
    """Highest-scoring label; ties resolve to the earliest in the fixed order
    Entailment < Neutral < Contradiction."""
    best = LABEL_ORDER[0]
    for label in LABEL_ORDER[1:]:
        if scores[label] > scores[best]:
            best = label
    return best


def save_verbalizer_file(
    mv: MultilingualVerbalizer, vocab: Vocabulary, path: str | Path
) -> None:
    """One record per language listing the three answer words."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for lang, verb in mv.verbalizers.items():
            rec = {
                "language": lang,
                "words": {lab.value: vocab.word(verb[lab]) for lab in LABEL_ORDER},
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def load_verbalizer_file(path: str | Path, vocab: Vocabulary) -> MultilingualVerbalizer:
    verbalizers: dict[str, Verbalizer] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            indices = {
                Label(lab): _word_index(word, vocab)
                for lab, word in rec["words"].items()
            }
            verbalizers[rec["language"]] = Verbalizer(rec["language"], indices)
    return MultilingualVerbalizer(verbalizers)
