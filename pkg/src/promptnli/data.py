"""Dataset ingestion, bilingual dictionaries, synthetic benchmark, few-shot sampling.

Datasets are line-delimited JSON records with fields ``premise``,
``hypothesis``, ``label``, ``language``.  Dictionaries are MUSE-style
two-column tab-separated word pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np


class Label(Enum):
    ENTAILMENT = "entailment"
    CONTRADICTION = "contradiction"
    NEUTRAL = "neutral"


# Fixed order used for argmax tie-breaking and balanced generation.
LABEL_ORDER = (Label.ENTAILMENT, Label.NEUTRAL, Label.CONTRADICTION)


class DataError(Exception):
    """Raised on malformed dataset or dictionary files."""


class ConfigError(Exception):
    """Raised on invalid configuration values."""


@dataclass(frozen=True)
class NliExample:
    premise: tuple[str, ...]
    hypothesis: tuple[str, ...]
    label: Label
    language: str

    def __post_init__(self):
        if not self.premise or not self.hypothesis:
            raise DataError("premise and hypothesis must each contain at least one word")


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[NliExample, ...]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def by_label(self) -> dict[Label, list[NliExample]]:
        groups: dict[Label, list[NliExample]] = {lab: [] for lab in LABEL_ORDER}
        for ex in self.examples:
            groups[ex.label].append(ex)
        return groups

    def words(self) -> set[str]:
        out: set[str] = set()
        for ex in self.examples:
            out.update(ex.premise)
            out.update(ex.hypothesis)
        return out


@dataclass
class BilingualDictionary:
    """Word-to-word translation map; lookups fold case on the source side."""

    source_lang: str
    target_lang: str
    entries: dict[str, str] = field(default_factory=dict)
    skipped_lines: int = 0

    def lookup(self, word: str) -> str | None:
        return self.entries.get(word.lower())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _parse_label(raw: str, lineno: int | None = None) -> Label:
    try:
        return Label(raw.strip().lower())
    except ValueError:
        where = f" on line {lineno}" if lineno is not None else ""
        raise DataError(f"unknown label {raw!r}{where}") from None


def load_dataset(path: str | Path, split: str = "train") -> LabeledDataset:
    """Load a line-delimited JSON dataset, preserving file order."""
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON on line {lineno}: {exc}") from None
            for field_name in ("premise", "hypothesis", "label", "language"):
                if field_name not in rec:
                    raise DataError(f"missing field {field_name!r} on line {lineno}")
            examples.append(
                NliExample(
                    premise=tuple(rec["premise"].split()),
                    hypothesis=tuple(rec["hypothesis"].split()),
                    label=_parse_label(rec["label"], lineno),
                    language=rec["language"],
                )
            )
    return LabeledDataset(tuple(examples), split=split)


def save_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    """Serialize in the canonical form that :func:`load_dataset` reads back."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in dataset:
            rec = {
                "premise": " ".join(ex.premise),
                "hypothesis": " ".join(ex.hypothesis),
                "label": ex.label.value,
                "language": ex.language,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def load_dictionary(path: str | Path, src: str, tgt: str) -> BilingualDictionary:
    """Load a two-column word-pair file.  First occurrence of a source word wins;
    malformed lines are skipped and counted."""
    path = Path(path)
    entries: dict[str, str] = {}
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                parts = line.split()
            if len(parts) < 2 or not parts[0] or not parts[1]:
                skipped += 1
                continue
            key = parts[0].lower()
            if key not in entries:
                entries[key] = parts[1]
    if not entries:
        raise DataError(f"dictionary file {path} contains no usable entries")
    return BilingualDictionary(src, tgt, entries, skipped_lines=skipped)


def save_dictionary(dictionary: BilingualDictionary, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for src, tgt in dictionary.entries.items():
            fh.write(f"{src}\t{tgt}\n")


def sample_few_shot(dataset: LabeledDataset, k: int, seed: int) -> LabeledDataset:
    """Sample k examples per label without replacement, deterministically per seed."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    groups = dataset.by_label()
    for label in LABEL_ORDER:
        if len(groups[label]) < k:
            raise DataError(
                f"not enough examples of class {label.name}: "
                f"have {len(groups[label])}, need {k}"
            )
    rng = np.random.default_rng([seed, k])
    chosen_indices: list[int] = []
    index_by_label: dict[Label, list[int]] = {lab: [] for lab in LABEL_ORDER}
    for i, ex in enumerate(dataset.examples):
        index_by_label[ex.label].append(i)
    for label in LABEL_ORDER:
        pool = index_by_label[label]
        picks = rng.choice(len(pool), size=k, replace=False)
        chosen_indices.extend(pool[p] for p in picks)
    chosen_indices.sort()
    return LabeledDataset(
        tuple(dataset.examples[i] for i in chosen_indices), split=dataset.split
    )


# ---------------------------------------------------------------------------
# Synthetic multilingual benchmark
# ---------------------------------------------------------------------------

PIVOT_LANG = "l0"

# Function words every lexicon must host: determiner, negator, conjunction,
# and the three answer words of the pivot verbalizer.
_FUNCTION_WORDS = ("the", "not", "and", "yes", "no", "maybe")


@dataclass(frozen=True)
class SynthLanguageSpec:
    """A synthetic language: a bijective relabeling of the pivot lexicon."""

    lang: str
    lexicon: dict[str, str]

    def translate(self, words: Sequence[str]) -> tuple[str, ...]:
        return tuple(self.lexicon[w] for w in words)


@dataclass(frozen=True)
class SyntheticBenchmark:
    languages: tuple[str, ...]
    datasets: dict[str, dict[str, LabeledDataset]]  # lang -> split -> dataset
    dictionaries: dict[str, BilingualDictionary]  # lang -> pivot->lang dictionary
    pivot_words: tuple[str, ...]

    def all_words(self) -> set[str]:
        words = set(self.pivot_words)
        for d in self.dictionaries.values():
            words.update(d.entries.values())
        return words


def _pivot_lexicon(vocab_size: int) -> dict[str, list[str]]:
    """Partition a pivot lexicon of the requested size into generator roles."""
    content = vocab_size - len(_FUNCTION_WORDS)
    n_adv = max(3, content // 6)
    n_adj = max(6, content // 4)
    n_verb = max(4, content // 5)
    n_verb -= n_verb % 2  # antonyms are paired
    n_noun = content - n_adj - n_verb - n_adv
    if n_noun < 6:
        raise ConfigError(
            f"vocab_size={vocab_size} too small to host the generation rules"
        )
    return {
        "noun": [f"noun{i}" for i in range(n_noun)],
        "verb": [f"verb{i}" for i in range(n_verb)],
        "adj": [f"adj{i}" for i in range(n_adj)],
        "adv": [f"adv{i}" for i in range(n_adv)],
    }


def _make_triple(rng: np.random.Generator, roles: dict[str, list[str]], label: Label):
    """One labeled premise/hypothesis pair.

    Hypothesis length and the premise-to-hypothesis length gap follow the
    same distributions for every label, so only lexical content (negator,
    antonym partner, unrelated clause) carries the label signal.

    Rules: entailment drops modifiers; contradiction additionally inserts the
    negator or swaps the verb to its designated antonym; neutral appends an
    unrelated clause to a modifier-reduced premise.
    """
    nouns, verbs, adjs, advs = (
        roles["noun"], roles["verb"], roles["adj"], roles["adv"]
    )
    hyp_len = int(rng.integers(9, 13))
    delta = int(rng.integers(1, 3))  # premise is this much longer

    if label is Label.ENTAILMENT:
        drops, clause_len, negate, antonym = delta, 0, False, False
    elif label is Label.CONTRADICTION:
        antonym = bool(rng.random() < 0.5)
        negate = not antonym
        drops = delta if antonym else delta + 1
        clause_len = 0
    else:
        clause_len = int(rng.integers(3, min(5, hyp_len - 5) + 1))
        drops, negate, antonym = delta + clause_len, False, False

    n1, n2, n3, n4 = (nouns[i] for i in rng.choice(len(nouns), size=4, replace=False))
    vi = int(rng.integers(len(verbs)))
    verb = verbs[vi]
    verb_anti = verbs[vi ^ 1]  # antonyms are paired (0,1), (2,3), ...

    n_mods = hyp_len + delta - 5
    n_adv_mods = int(rng.integers(0, min(n_mods, 3) + 1))
    n_adj1 = int(rng.integers(0, n_mods - n_adv_mods + 1))
    n_adj2 = n_mods - n_adv_mods - n_adj1
    adj_words = [
        adjs[i] for i in rng.choice(len(adjs), size=n_adj1 + n_adj2, replace=False)
    ]
    adv_words = [advs[i] for i in rng.choice(len(advs), size=n_adv_mods, replace=False)]

    # (word, is_modifier): entailed drops touch modifiers only
    premise_tagged = (
        [("the", False)]
        + [(w, True) for w in adj_words[:n_adj1]]
        + [(n1, False), (verb, False)]
        + [(w, True) for w in adv_words]
        + [("the", False)]
        + [(w, True) for w in adj_words[n_adj1:]]
        + [(n2, False)]
    )
    premise = tuple(w for w, _ in premise_tagged)

    mod_positions = [i for i, (_, is_mod) in enumerate(premise_tagged) if is_mod]
    dropped = set(rng.choice(mod_positions, size=drops, replace=False))
    core = [w for i, (w, _) in enumerate(premise_tagged) if i not in dropped]

    if negate:
        core.insert(core.index(verb), "not")
    elif antonym:
        core[core.index(verb)] = verb_anti
    if clause_len:
        unrelated = verbs[(vi + 2) % len(verbs)]  # neither the verb nor its antonym
        clause = {
            3: ["and", n3, unrelated],
            4: ["and", "the", n3, unrelated],
            5: ["and", "the", n3, unrelated, n4],
        }[clause_len]
        core.extend(clause)
    return premise, tuple(core)


def gen_synthetic_benchmark(
    num_languages: int,
    vocab_size: int,
    examples_per_split: dict[str, int],
    seed: int,
) -> SyntheticBenchmark:
    """Generate a parallel multilingual NLI benchmark with labels correct by
    construction, plus the ground-truth pivot-to-target dictionaries."""
    if num_languages < 2:
        raise ConfigError("num_languages must be >= 2")
    if vocab_size < 50:
        raise ConfigError("vocab_size must be >= 50")
    roles = _pivot_lexicon(vocab_size)
    pivot_words = tuple(_FUNCTION_WORDS) + tuple(
        w for role in ("noun", "verb", "adj", "adv") for w in roles[role]
    )
    languages = tuple(f"l{i}" for i in range(num_languages))
    specs = {
        lang: SynthLanguageSpec(lang, {w: f"{w}_{lang}" for w in pivot_words})
        for lang in languages[1:]
    }
    dictionaries = {
        lang: BilingualDictionary(PIVOT_LANG, lang, dict(spec.lexicon))
        for lang, spec in specs.items()
    }

    rng = np.random.default_rng(seed)
    datasets: dict[str, dict[str, LabeledDataset]] = {lang: {} for lang in languages}
    for split, count in examples_per_split.items():
        pivot_examples = []
        for i in range(count):
            label = LABEL_ORDER[i % 3]
            premise, hypothesis = _make_triple(rng, roles, label)
            pivot_examples.append(NliExample(premise, hypothesis, label, PIVOT_LANG))
        datasets[PIVOT_LANG][split] = LabeledDataset(tuple(pivot_examples), split)
        for lang in languages[1:]:
            spec = specs[lang]
            translated = tuple(
                NliExample(
                    spec.translate(ex.premise), spec.translate(ex.hypothesis), ex.label, lang
                )
                for ex in pivot_examples
            )
            datasets[lang][split] = LabeledDataset(translated, split)
    return SyntheticBenchmark(languages, datasets, dictionaries, pivot_words)
