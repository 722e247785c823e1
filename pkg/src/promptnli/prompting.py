"""Cloze-style question construction under discrete, soft, and mixed templates."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .data import ConfigError, Label, NliExample
from .vocab import Vocabulary


class PromptMode(Enum):
    DP = "dp"  # discrete template words only
    SP = "sp"  # trainable soft slots only
    MP = "mp"  # both


@dataclass(frozen=True)
class PromptConfig:
    mode: PromptMode = PromptMode.SP
    soft_len: int = 4
    question_word: str = "question"
    answer_word: str = "answer"
    max_len: int = 256

    def __post_init__(self):
        if self.mode is PromptMode.DP:
            if self.soft_len != 0:
                object.__setattr__(self, "soft_len", 0)
        elif self.soft_len < 1:
            raise ConfigError(f"{self.mode.value} prompts require soft_len >= 1")


@dataclass(frozen=True)
class ClozeQuestion:
    token_ids: tuple[int, ...]
    mask_pos: int
    slot_positions: tuple[int, ...]
    label: Label
    language: str

    def __post_init__(self):
        assert 0 <= self.mask_pos < len(self.token_ids)


def build_cloze_question(
    example: NliExample, cfg: PromptConfig, vocab: Vocabulary
) -> ClozeQuestion:
    """Wrap a premise/hypothesis pair into a single-mask cloze question.

    Layouts (soft slots written v1..vn):
      SP: <s> premise . </s> <s> hypothesis ? v1..vn <mask> </s>
      DP: <s> premise . </s> <s> question : hypothesis ? answer : <mask> </s>
      MP: <s> premise . </s> <s> question : hypothesis ? v1..vn answer : <mask> </s>
    Overlength inputs are truncated premise-tail first, then hypothesis-tail;
    the template scaffold and mask are never truncated.
    """
    if cfg.soft_len > vocab.num_soft_slots:
        raise ConfigError(
            f"soft_len {cfg.soft_len} exceeds the {vocab.num_soft_slots} "
            "reserved slot ids"
        )
    premise = list(example.premise)
    hypothesis = list(example.hypothesis)

    discrete = cfg.mode in (PromptMode.DP, PromptMode.MP)
    scaffold = 7 + (4 if discrete else 0)  # bos/eos pairs, '.', '?', mask, template words
    budget = cfg.max_len - scaffold - cfg.soft_len
    if len(premise) + len(hypothesis) > budget:
        keep_p = max(1, budget - len(hypothesis))
        premise = premise[:keep_p]
        if len(premise) + len(hypothesis) > budget:
            hypothesis = hypothesis[: max(1, budget - len(premise))]

    ids: list[int] = [vocab.bos_id, *vocab.encode(premise), vocab.id("."), vocab.eos_id]
    ids.append(vocab.bos_id)
    if discrete:
        ids += [vocab.id(cfg.question_word), vocab.id(":")]
    ids += vocab.encode(hypothesis)
    ids.append(vocab.id("?"))
    slot_positions = tuple(range(len(ids), len(ids) + cfg.soft_len))
    ids += list(vocab.slot_ids[: cfg.soft_len])
    if discrete:
        ids += [vocab.id(cfg.answer_word), vocab.id(":")]
    mask_pos = len(ids)
    ids.append(vocab.mask_id)
    ids.append(vocab.eos_id)

    return ClozeQuestion(
        tuple(ids), mask_pos, slot_positions, example.label, example.language
    )


TEMPLATE_WORDS = (".", "?", ":", "question", "answer")
