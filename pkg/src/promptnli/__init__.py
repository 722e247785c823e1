"""Cloze-style soft-prompt cross-lingual NLI with code-switched augmentation,
a multilingual verbalizer, and a CE + symmetric-KL consistency objective."""

from .augment import CodeSwitchConfig, augment_question, code_switch_sentence
from .data import (
    BilingualDictionary,
    Label,
    LabeledDataset,
    NliExample,
    gen_synthetic_benchmark,
    load_dataset,
    load_dictionary,
    sample_few_shot,
)
from .estimator import ClozePromptNliClassifier
from .model import ClozeEncoder, ModelConfig, load_checkpoint, save_checkpoint
from .objective import LossWeights, batch_ce, instance_ce, kl_consistency, total_loss
from .pipeline import ExperimentConfig, run_few_shot, run_few_shot_seeds
from .prompting import ClozeQuestion, PromptConfig, PromptMode, build_cloze_question
from .training import EvalReport, TrainConfig, evaluate, predict_label, train
from .verbalizer import (
    MultilingualVerbalizer,
    Verbalizer,
    argmax_label,
    class_scores,
    default_english,
    translate_verbalizer,
)
from .vocab import Vocabulary

__version__ = "0.1.0"
