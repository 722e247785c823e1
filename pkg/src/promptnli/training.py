"""Training loop, evaluation, and multi-seed aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .augment import CodeSwitchConfig, augment_question, derive_seed
from .data import ConfigError, Label, LabeledDataset, NliExample
from .model import ClozeEncoder, batch_forward
from .objective import LossWeights, total_loss
from .prompting import ClozeQuestion, PromptConfig, build_cloze_question
from .verbalizer import MultilingualVerbalizer, argmax_label, class_scores
from .vocab import Vocabulary

# Salt separating the batch-shuffling stream from other seeded streams.
BATCH_STREAM_SALT = 7919


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 70
    batch_size: int = 24
    lr: float = 1e-2
    weight_decay: float = 0.01
    seed: int = 1
    train_scope: str = "all"  # or "prompts-only"
    kl_support: str = "vocab"  # or "answers"
    loss_weights: LossWeights = field(default_factory=lambda: LossWeights(kld=0.3))

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.weight_decay < 0:
            raise ConfigError("weight decay must be >= 0")


@dataclass
class StepRecord:
    step: int
    loss_orig: float
    loss_aug: float
    loss_kld: float
    total: float


@dataclass
class TrainingLog:
    steps: list[StepRecord] = field(default_factory=list)
    dev_accuracy: list[float] = field(default_factory=list)
    selected_epoch: int = 0


@dataclass
class EvalReport:
    per_language: dict[str, float]
    seed: int | None = None
    shots: int | None = None

    @property
    def average(self) -> float:
        return float(np.mean(list(self.per_language.values())))


def shuffled_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    order = [int(i) for i in rng.permutation(n)]
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def _build_questions(
    examples, cfg: PromptConfig, vocab: Vocabulary
) -> list[ClozeQuestion]:
    return [build_cloze_question(ex, cfg, vocab) for ex in examples]


def _dataset_accuracy(
    model: ClozeEncoder,
    dataset: LabeledDataset,
    mv: MultilingualVerbalizer,
    prompt_cfg: PromptConfig,
    vocab: Vocabulary,
    lang: str | None = None,
    batch_size: int = 128,
) -> float:
    questions = _build_questions(dataset.examples, prompt_cfg, vocab)
    correct = 0
    with torch.no_grad():
        for start in range(0, len(questions), batch_size):
            chunk = questions[start : start + batch_size]
            probs, _ = batch_forward(model, chunk, vocab)
            for q, dist in zip(chunk, probs):
                scores = class_scores(dist.numpy(), mv, lang=lang)
                if argmax_label(scores) is q.label:
                    correct += 1
    return correct / len(questions)


def train(
    model: ClozeEncoder,
    data: LabeledDataset,
    dev: LabeledDataset,
    mv: MultilingualVerbalizer,
    prompt_cfg: PromptConfig,
    cs_cfg: CodeSwitchConfig,
    tc: TrainConfig,
    vocab: Vocabulary,
) -> tuple[ClozeEncoder, TrainingLog]:
    """Run the full training loop and return the best-dev checkpoint.

    Each batch element contributes its original question and its code-switched
    view in lockstep, so the consistency term always pairs matching views.
    Soft prompts are trainable during training and frozen on return.
    """
    if len(data) == 0 or len(dev) == 0:
        raise ConfigError("training and dev sets must be non-empty")
    torch.set_num_threads(1)  # fixed reduction order for bitwise determinism

    model.set_train_scope(tc.train_scope)
    model.set_prompt_trainable(True)
    # AdamW's decoupled decay shrinks rows even when their gradient is masked
    # to zero, so the embedding table is exempt from decay under prompts-only.
    emb_decay = 0.0 if tc.train_scope == "prompts-only" else tc.weight_decay
    groups = [
        {"params": [model.embedding.weight], "weight_decay": emb_decay},
        {
            "params": [
                p
                for name, p in model.named_parameters()
                if name != "embedding.weight" and p.requires_grad
            ],
            "weight_decay": tc.weight_decay,
        },
    ]
    optimizer = torch.optim.AdamW(groups, lr=tc.lr, betas=(0.9, 0.999), eps=1e-8)

    examples = list(data.examples)
    orig_questions = _build_questions(examples, prompt_cfg, vocab)

    def augmented_questions(epoch: int) -> list[ClozeQuestion]:
        if cs_cfg.rate == 0 or not cs_cfg.dictionaries:
            return orig_questions
        epoch_key = 0 if cs_cfg.static_augmentation else epoch
        views = [
            augment_question(ex, cs_cfg, derive_seed(tc.seed, i, epoch_key))
            for i, ex in enumerate(examples)
        ]
        return _build_questions(views, prompt_cfg, vocab)

    static_aug = augmented_questions(0)

    log = TrainingLog()
    batch_rng = np.random.default_rng([tc.seed, BATCH_STREAM_SALT])
    best_acc = -1.0
    best_state: dict | None = None
    step = 0
    for epoch in range(tc.epochs):
        aug_questions = static_aug if cs_cfg.static_augmentation else augmented_questions(epoch)
        for batch in shuffled_batches(len(examples), tc.batch_size, batch_rng):
            orig_batch = [orig_questions[i] for i in batch]
            aug_batch = [aug_questions[i] for i in batch]
            labels = [examples[i].label for i in batch]
            orig_probs, _ = batch_forward(model, orig_batch, vocab)
            aug_probs, _ = batch_forward(model, aug_batch, vocab)
            breakdown = total_loss(
                orig_probs, aug_probs, labels, mv, tc.loss_weights, tc.kl_support
            )
            if not torch.isfinite(breakdown.total):
                raise RuntimeError(
                    f"non-finite loss at step {step} (epoch {epoch}): "
                    f"{breakdown.floats()}"
                )
            optimizer.zero_grad()
            breakdown.total.backward()
            optimizer.step()
            lo, la, lk, lt = breakdown.floats()
            log.steps.append(StepRecord(step, lo, la, lk, lt))
            step += 1
        acc = _dataset_accuracy(model, dev, mv, prompt_cfg, vocab)
        log.dev_accuracy.append(acc)
        if acc > best_acc:
            best_acc = acc
            log.selected_epoch = epoch
            best_state = {
                k: v.detach().clone() for k, v in model.state_dict().items()
            }

    if best_state is not None:
        model.load_state_dict(best_state)
    model.set_prompt_trainable(False)
    return model, log


def evaluate(
    model: ClozeEncoder,
    test_sets: dict[str, LabeledDataset],
    mv: MultilingualVerbalizer,
    prompt_cfg: PromptConfig,
    vocab: Vocabulary,
    lang_mode: str | None = None,
    seed: int | None = None,
    shots: int | None = None,
) -> EvalReport:
    """Per-language accuracy on held-out sets; no augmentation at inference."""
    per_language: dict[str, float] = {}
    for lang, dataset in test_sets.items():
        if len(dataset) == 0:
            raise ConfigError(f"empty test set for language {lang!r}")
        per_language[lang] = _dataset_accuracy(
            model, dataset, mv, prompt_cfg, vocab, lang=lang_mode
        )
    return EvalReport(per_language, seed=seed, shots=shots)


def predict_label(
    model: ClozeEncoder,
    example: NliExample,
    mv: MultilingualVerbalizer,
    prompt_cfg: PromptConfig,
    vocab: Vocabulary,
    lang_mode: str | None = None,
) -> Label:
    question = build_cloze_question(example, prompt_cfg, vocab)
    with torch.no_grad():
        probs, _ = batch_forward(model, [question], vocab)
    return argmax_label(class_scores(probs[0].numpy(), mv, lang=lang_mode))


def mean_report(reports: list[EvalReport]) -> EvalReport:
    """Element-wise mean of per-language accuracies across seeds."""
    if not reports:
        raise ConfigError("need at least one report")
    langs = list(reports[0].per_language)
    for rep in reports:
        if list(rep.per_language) != langs:
            raise ConfigError("reports cover different language sets")
    mean = {
        lang: float(np.mean([rep.per_language[lang] for rep in reports]))
        for lang in langs
    }
    return EvalReport(mean, shots=reports[0].shots)


def run_seeds(run_one, seeds) -> tuple[EvalReport, list[EvalReport]]:
    """Run ``run_one(seed)`` for every seed and average the reports."""
    reports = [run_one(seed) for seed in seeds]
    return mean_report(reports), reports
