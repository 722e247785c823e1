"""Scikit-learn style wrapper so the method composes with the wider ecosystem.

``fit`` takes a sequence of :class:`NliExample` (or premise/hypothesis pairs
plus ``y``), trains the cloze-prompt classifier, and ``predict`` returns label
strings.  All constructor arguments are plain values, so ``get_params`` /
``set_params`` and ``clone`` behave as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .augment import CodeSwitchConfig
from .data import BilingualDictionary, Label, LabeledDataset, NliExample
from .model import ClozeEncoder, ModelConfig
from .objective import LossWeights
from .prompting import TEMPLATE_WORDS, PromptConfig, PromptMode
from .training import TrainConfig, predict_label, train
from .verbalizer import ENGLISH_ANSWER_WORDS, MultilingualVerbalizer, Verbalizer, default_english, translate_verbalizer
from .vocab import Vocabulary


def _as_examples(X, y) -> list[NliExample]:
    if y is None:
        examples = list(X)
        if not all(isinstance(ex, NliExample) for ex in examples):
            raise ValueError("without y, X must be a sequence of NliExample")
        return examples
    out = []
    for pair, label in zip(X, y):
        premise, hypothesis = pair
        if isinstance(premise, str):
            premise = tuple(premise.split())
        if isinstance(hypothesis, str):
            hypothesis = tuple(hypothesis.split())
        lab = label if isinstance(label, Label) else Label(str(label).lower())
        out.append(NliExample(tuple(premise), tuple(hypothesis), lab, "en"))
    return out


class ClozePromptNliClassifier(ClassifierMixin, BaseEstimator):
    def __init__(
        self,
        dim=64,
        layers=2,
        heads=4,
        ffn_dim=128,
        prompt_mode="sp",
        soft_len=4,
        max_len=256,
        cs_rate=0.7,
        dictionaries=(),
        epochs=70,
        batch_size=24,
        lr=1e-2,
        weight_decay=0.01,
        lambda_orig=1.0,
        lambda_aug=1.0,
        lambda_kld=0.3,
        kl_support="vocab",
        train_scope="all",
        prompt_init="vocab_mean",
        seed=1,
    ):
        self.dim = dim
        self.layers = layers
        self.heads = heads
        self.ffn_dim = ffn_dim
        self.prompt_mode = prompt_mode
        self.soft_len = soft_len
        self.max_len = max_len
        self.cs_rate = cs_rate
        self.dictionaries = dictionaries
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.lambda_orig = lambda_orig
        self.lambda_aug = lambda_aug
        self.lambda_kld = lambda_kld
        self.kl_support = kl_support
        self.train_scope = train_scope
        self.prompt_init = prompt_init
        self.seed = seed

    def _prompt_config(self) -> PromptConfig:
        mode = PromptMode(self.prompt_mode)
        soft_len = 0 if mode is PromptMode.DP else self.soft_len
        return PromptConfig(mode=mode, soft_len=soft_len, max_len=self.max_len)

    def fit(self, X, y=None, validation_data=None):
        examples = _as_examples(X, y)
        train_set = LabeledDataset(tuple(examples), split="train")
        dev_set = (
            LabeledDataset(tuple(_as_examples(*validation_data)), split="dev")
            if validation_data is not None
            else train_set
        )

        dicts: tuple[BilingualDictionary, ...] = tuple(self.dictionaries)
        words = set(train_set.words()) | set(dev_set.words()) | set(TEMPLATE_WORDS)
        words |= {w for w in ENGLISH_ANSWER_WORDS.values()}
        for d in dicts:
            words |= set(d.entries.values())
        prompt_cfg = self._prompt_config()
        vocab = Vocabulary.build(words, num_soft_slots=max(16, prompt_cfg.soft_len))

        pivot_lang = examples[0].language
        pivot = default_english(vocab, lang=pivot_lang)
        verbalizers: dict[str, Verbalizer] = {pivot_lang: pivot}
        for d in dicts:
            verbalizers[d.target_lang] = translate_verbalizer(pivot, d, vocab)
        mv = MultilingualVerbalizer(verbalizers)

        cs_cfg = CodeSwitchConfig(
            rate=self.cs_rate if dicts else 0.0, dictionaries=dicts
        )
        model = ClozeEncoder(
            ModelConfig(
                vocab_size=len(vocab),
                dim=self.dim,
                layers=self.layers,
                heads=self.heads,
                ffn_dim=self.ffn_dim,
                max_len=self.max_len,
                num_soft_slots=vocab.num_soft_slots,
                prompt_init=self.prompt_init,
            ),
            seed=self.seed,
        )
        tc = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            weight_decay=self.weight_decay,
            seed=self.seed,
            train_scope=self.train_scope,
            kl_support=self.kl_support,
            loss_weights=LossWeights(self.lambda_orig, self.lambda_aug, self.lambda_kld),
        )
        model, log = train(model, train_set, dev_set, mv, prompt_cfg, cs_cfg, tc, vocab)

        self.model_ = model
        self.vocab_ = vocab
        self.verbalizer_ = mv
        self.training_log_ = log
        self.classes_ = np.array([lab.value for lab in Label])
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")

    def predict(self, X):
        self._check_fitted()
        examples = _as_examples(X, None) if X and isinstance(X[0], NliExample) else [
            NliExample(tuple(p.split()) if isinstance(p, str) else tuple(p),
                       tuple(h.split()) if isinstance(h, str) else tuple(h),
                       Label.ENTAILMENT, "en")
            for p, h in X
        ]
        labels = [
            predict_label(
                self.model_, ex, self.verbalizer_, self._prompt_config(), self.vocab_
            )
            for ex in examples
        ]
        return np.array([lab.value for lab in labels])

    def score(self, X, y=None):
        if y is None:
            examples = _as_examples(X, None)
            y = [ex.label.value for ex in examples]
        preds = self.predict(X)
        y = [lab.value if isinstance(lab, Label) else str(lab).lower() for lab in y]
        return float(np.mean(preds == np.array(y)))
