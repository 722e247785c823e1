"""Word-level vocabulary with special tokens and reserved soft-prompt slots."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

PAD, UNK, BOS, EOS, MASK = "<pad>", "<unk>", "<s>", "</s>", "<mask>"
SPECIALS = (PAD, UNK, BOS, EOS, MASK)


def _slot_token(i: int) -> str:
    return f"<v{i + 1}>"


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    num_soft_slots: int

    @classmethod
    def build(cls, words: Iterable[str], num_soft_slots: int = 16) -> "Vocabulary":
        """Layout: specials, then soft slots, then sorted lexicon words."""
        lexicon = sorted(set(words) - set(SPECIALS))
        slots = tuple(_slot_token(i) for i in range(num_soft_slots))
        return cls(SPECIALS + slots + tuple(lexicon), num_soft_slots)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {tok: i for i, tok in enumerate(self.tokens)}
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def id(self, word: str) -> int:
        idx = self._index.get(word)
        return self._index[UNK] if idx is None else idx

    def word(self, token_id: int) -> str:
        return self.tokens[token_id]

    @property
    def pad_id(self) -> int:
        return self._index[PAD]

    @property
    def unk_id(self) -> int:
        return self._index[UNK]

    @property
    def bos_id(self) -> int:
        return self._index[BOS]

    @property
    def eos_id(self) -> int:
        return self._index[EOS]

    @property
    def mask_id(self) -> int:
        return self._index[MASK]

    @property
    def slot_ids(self) -> tuple[int, ...]:
        start = len(SPECIALS)
        return tuple(range(start, start + self.num_soft_slots))

    @property
    def lexicon_ids(self) -> tuple[int, ...]:
        """Ids of plain lexicon words (no specials, no soft slots)."""
        return tuple(range(len(SPECIALS) + self.num_soft_slots, len(self.tokens)))

    def encode(self, words: Sequence[str]) -> list[int]:
        return [self.id(w) for w in words]

    def decode(self, token_ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in token_ids]
