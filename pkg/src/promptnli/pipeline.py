"""End-to-end experiment assembly on the synthetic benchmark: few-shot runs,
the ablation suite, and the analysis sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .augment import CodeSwitchConfig
from .data import (
    PIVOT_LANG,
    SyntheticBenchmark,
    gen_synthetic_benchmark,
    sample_few_shot,
)
from .model import ClozeEncoder, ModelConfig
from .prompting import TEMPLATE_WORDS, PromptConfig, PromptMode
from .training import EvalReport, TrainConfig, TrainingLog, evaluate, mean_report, train
from .verbalizer import (
    MultilingualVerbalizer,
    Verbalizer,
    default_english,
    translate_verbalizer,
)
from .vocab import Vocabulary

# Dev few-shot draws use a distinct stream from the train draw.
DEV_SAMPLE_SALT = 104729


@dataclass(frozen=True)
class ExperimentConfig:
    shots: int = 8
    num_languages: int = 4
    vocab_size: int = 60
    train_size: int = 900
    dev_size: int = 300
    test_size: int = 120
    benchmark_seed: int = 0
    dim: int = 64
    layers: int = 2
    heads: int = 4
    ffn_dim: int = 128
    cs_rate: float = 0.7
    fixed_cs_lang: str | None = None
    static_augmentation: bool = True
    multilingual_verbalizer: bool = True
    prompt_init: str = "vocab_mean"
    eval_lang_mode: str | None = None  # None averages over all languages
    prompt: PromptConfig = field(default_factory=PromptConfig)
    trainer: TrainConfig = field(default_factory=TrainConfig)


def build_vocabulary(benchmark: SyntheticBenchmark, num_soft_slots: int = 16) -> Vocabulary:
    words = benchmark.all_words() | set(TEMPLATE_WORDS)
    return Vocabulary.build(words, num_soft_slots=num_soft_slots)


def build_verbalizer(
    benchmark: SyntheticBenchmark, vocab: Vocabulary, multilingual: bool = True
) -> MultilingualVerbalizer:
    pivot = default_english(vocab, lang=PIVOT_LANG)
    verbalizers: dict[str, Verbalizer] = {PIVOT_LANG: pivot}
    if multilingual:
        for lang, dictionary in benchmark.dictionaries.items():
            verbalizers[lang] = translate_verbalizer(pivot, dictionary, vocab)
    return MultilingualVerbalizer(verbalizers)


def make_benchmark(cfg: ExperimentConfig) -> SyntheticBenchmark:
    return gen_synthetic_benchmark(
        num_languages=cfg.num_languages,
        vocab_size=cfg.vocab_size,
        examples_per_split={
            "train": cfg.train_size,
            "dev": cfg.dev_size,
            "test": cfg.test_size,
        },
        seed=cfg.benchmark_seed,
    )


def run_few_shot(
    cfg: ExperimentConfig,
    seed: int,
    benchmark: SyntheticBenchmark | None = None,
) -> tuple[ClozeEncoder, TrainingLog, EvalReport]:
    """Train on a pivot-language few-shot sample, evaluate on every language."""
    if benchmark is None:
        benchmark = make_benchmark(cfg)
    vocab = build_vocabulary(benchmark, num_soft_slots=max(16, cfg.prompt.soft_len))
    mv = build_verbalizer(benchmark, vocab, multilingual=cfg.multilingual_verbalizer)

    pivot = benchmark.datasets[PIVOT_LANG]
    train_set = sample_few_shot(pivot["train"], cfg.shots, seed)
    dev_set = sample_few_shot(pivot["dev"], cfg.shots, seed + DEV_SAMPLE_SALT)

    cs_cfg = CodeSwitchConfig(
        rate=cfg.cs_rate,
        fixed_lang=cfg.fixed_cs_lang,
        dictionaries=tuple(benchmark.dictionaries.values()) if cfg.cs_rate > 0 else (),
        static_augmentation=cfg.static_augmentation,
    )
    model_cfg = ModelConfig(
        vocab_size=len(vocab),
        dim=cfg.dim,
        layers=cfg.layers,
        heads=cfg.heads,
        ffn_dim=cfg.ffn_dim,
        max_len=cfg.prompt.max_len,
        num_soft_slots=vocab.num_soft_slots,
        prompt_init=cfg.prompt_init,
    )
    model = ClozeEncoder(model_cfg, seed=seed)
    tc = replace(cfg.trainer, seed=seed)
    model, log = train(model, train_set, dev_set, mv, cfg.prompt, cs_cfg, tc, vocab)

    test_sets = {lang: benchmark.datasets[lang]["test"] for lang in benchmark.languages}
    report = evaluate(
        model, test_sets, mv, cfg.prompt, vocab,
        lang_mode=cfg.eval_lang_mode, seed=seed, shots=cfg.shots,
    )
    return model, log, report


def run_few_shot_seeds(
    cfg: ExperimentConfig,
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
    benchmark: SyntheticBenchmark | None = None,
) -> tuple[EvalReport, list[EvalReport]]:
    if benchmark is None:
        benchmark = make_benchmark(cfg)
    reports = [run_few_shot(cfg, seed, benchmark)[2] for seed in seeds]
    return mean_report(reports), reports


def target_language_mean(report: EvalReport) -> float:
    """Mean accuracy over the non-pivot languages."""
    vals = [acc for lang, acc in report.per_language.items() if lang != PIVOT_LANG]
    return float(sum(vals) / len(vals))


# ---------------------------------------------------------------------------
# Ablation and sweep harnesses
# ---------------------------------------------------------------------------

ABLATION_NAMES = (
    "Original",
    "w/o code-switched",
    "w/o consistency loss",
    "w/o multilingual verbalizer",
    "using discrete prompts",
    "using mixed prompts",
    "using randomly initialized prompts",
)


def ablation_config(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    if name == "Original":
        return cfg
    if name == "w/o code-switched":
        return replace(cfg, cs_rate=0.0)
    if name == "w/o consistency loss":
        weights = replace(cfg.trainer.loss_weights, kld=0.0)
        return replace(cfg, trainer=replace(cfg.trainer, loss_weights=weights))
    if name == "w/o multilingual verbalizer":
        return replace(cfg, multilingual_verbalizer=False)
    if name == "using discrete prompts":
        return replace(cfg, prompt=replace(cfg.prompt, mode=PromptMode.DP, soft_len=0))
    if name == "using mixed prompts":
        return replace(
            cfg, prompt=replace(cfg.prompt, mode=PromptMode.MP, soft_len=cfg.prompt.soft_len or 4)
        )
    if name == "using randomly initialized prompts":
        return replace(cfg, prompt_init="random")
    raise ValueError(f"unknown ablation {name!r}")


def run_ablations(
    cfg: ExperimentConfig,
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
    names: tuple[str, ...] = ABLATION_NAMES,
) -> dict[str, tuple[EvalReport, list[EvalReport]]]:
    benchmark = make_benchmark(cfg)
    results = {}
    for name in names:
        variant = ablation_config(cfg, name)
        results[name] = run_few_shot_seeds(variant, seeds, benchmark)
    return results


def run_prompt_length_sweep(
    cfg: ExperimentConfig,
    lengths: tuple[int, ...] = (1, 2, 4, 8, 16),
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
) -> dict[int, tuple[EvalReport, list[EvalReport]]]:
    benchmark = make_benchmark(cfg)
    results = {}
    for n in lengths:
        variant = replace(cfg, prompt=replace(cfg.prompt, soft_len=n))
        results[n] = run_few_shot_seeds(variant, seeds, benchmark)
    return results


def run_cs_language_sweep(
    cfg: ExperimentConfig,
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
) -> dict[str, tuple[EvalReport, list[EvalReport]]]:
    """Fixed single-language code-switching per target language vs. the
    random-per-word strategy."""
    benchmark = make_benchmark(cfg)
    results = {}
    for lang in benchmark.languages[1:]:
        variant = replace(cfg, fixed_cs_lang=lang)
        results[f"fixed:{lang}"] = run_few_shot_seeds(variant, seeds, benchmark)
    results["random"] = run_few_shot_seeds(replace(cfg, fixed_cs_lang=None), seeds, benchmark)
    return results


def run_shot_grid(
    cfg: ExperimentConfig,
    shot_counts: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128, 256),
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
) -> dict[int, tuple[EvalReport, list[EvalReport]]]:
    benchmark = make_benchmark(cfg)
    results = {}
    for k in shot_counts:
        results[k] = run_few_shot_seeds(replace(cfg, shots=k), seeds, benchmark)
    return results
