"""Command-line entry point.

Commands: gen-data, train, eval, ablate, sweep-prompt-len, sweep-cs-lang,
dump-questions.  Every run writes its effective merged configuration next to
its outputs so any table can be reproduced from the emitted file alone.

Exit codes: 0 success, 1 run failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .augment import CodeSwitchConfig, code_switch_sentence, derive_seed
from .data import (
    PIVOT_LANG,
    ConfigError,
    DataError,
    sample_few_shot,
    save_dataset,
    save_dictionary,
)
from .model import save_checkpoint
from .objective import LossWeights
from .pipeline import (
    ABLATION_NAMES,
    ExperimentConfig,
    build_verbalizer,
    build_vocabulary,
    make_benchmark,
    run_ablations,
    run_cs_language_sweep,
    run_few_shot,
    run_prompt_length_sweep,
    run_shot_grid,
)
from .prompting import PromptConfig, PromptMode, build_cloze_question
from .reports import write_report, write_training_log
from .training import TrainConfig, mean_report
from .verbalizer import save_verbalizer_file

DEFAULT_SEEDS = (1, 2, 3, 4, 5)
OUTPUT_ROOT_ENV = "PROMPTNLI_OUT"


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["prompt"]["mode"] = cfg.prompt.mode.value
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = json.loads(json.dumps(d))  # deep copy
    prompt = d.pop("prompt", {})
    trainer = d.pop("trainer", {})
    weights = trainer.pop("loss_weights", {})
    if "mode" in prompt:
        prompt["mode"] = PromptMode(prompt["mode"])
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(
        **d,
        prompt=PromptConfig(**prompt),
        trainer=TrainConfig(loss_weights=LossWeights(**weights), **trainer),
    )


_OVERRIDE_FLAGS = {
    # flag name -> (section, field, type)
    "shots": (None, "shots", int),
    "num-languages": (None, "num_languages", int),
    "vocab-size": (None, "vocab_size", int),
    "train-size": (None, "train_size", int),
    "dev-size": (None, "dev_size", int),
    "test-size": (None, "test_size", int),
    "benchmark-seed": (None, "benchmark_seed", int),
    "dim": (None, "dim", int),
    "layers": (None, "layers", int),
    "heads": (None, "heads", int),
    "ffn-dim": (None, "ffn_dim", int),
    "alpha": (None, "cs_rate", float),
    "cs-lang": (None, "fixed_cs_lang", str),
    "prompt-init": (None, "prompt_init", str),
    "prompt-mode": ("prompt", "mode", str),
    "prompt-len": ("prompt", "soft_len", int),
    "max-len": ("prompt", "max_len", int),
    "epochs": ("trainer", "epochs", int),
    "batch-size": ("trainer", "batch_size", int),
    "lr": ("trainer", "lr", float),
    "weight-decay": ("trainer", "weight_decay", float),
    "lambda-orig": ("weights", "orig", float),
    "lambda-aug": ("weights", "aug", float),
    "lambda-kld": ("weights", "kld", float),
    "train-scope": ("trainer", "train_scope", str),
    "kl-support": ("trainer", "kl_support", str),
}


def add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file; flags override it")
    for flag, (_, field, typ) in _OVERRIDE_FLAGS.items():
        parser.add_argument(f"--{flag}", type=typ, default=None, dest=field)
    parser.add_argument(
        "--seeds", type=int, nargs="+", default=None, help="random seeds (default 1..5)"
    )
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        cfg = config_from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = ExperimentConfig()
    prompt_kwargs, trainer_kwargs, weight_kwargs, top_kwargs = {}, {}, {}, {}
    for _, (section, field, _typ) in _OVERRIDE_FLAGS.items():
        value = getattr(args, field, None)
        if value is None:
            continue
        if section == "prompt":
            prompt_kwargs[field] = PromptMode(value) if field == "mode" else value
        elif section == "trainer":
            trainer_kwargs[field] = value
        elif section == "weights":
            weight_kwargs[field] = value
        else:
            top_kwargs[field] = value
    if weight_kwargs:
        trainer_kwargs["loss_weights"] = dataclasses.replace(
            cfg.trainer.loss_weights, **weight_kwargs
        )
    if prompt_kwargs:
        top_kwargs["prompt"] = dataclasses.replace(cfg.prompt, **prompt_kwargs)
    if trainer_kwargs:
        top_kwargs["trainer"] = dataclasses.replace(cfg.trainer, **trainer_kwargs)
    return dataclasses.replace(cfg, **top_kwargs)


def resolve_out(path: Path) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    out = Path(root) / path if root and not path.is_absolute() else path
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_effective_config(cfg: ExperimentConfig, out: Path, extra: dict | None = None):
    payload = config_to_dict(cfg)
    if extra:
        payload.update(extra)
    (out / "config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    benchmark = make_benchmark(cfg)
    for lang, splits in benchmark.datasets.items():
        for split, dataset in splits.items():
            save_dataset(dataset, out / f"{lang}.{split}.jsonl")
    for lang, dictionary in benchmark.dictionaries.items():
        save_dictionary(dictionary, out / f"dict.{PIVOT_LANG}-{lang}.tsv")
    vocab = build_vocabulary(benchmark)
    mv = build_verbalizer(benchmark, vocab)
    save_verbalizer_file(mv, vocab, out / "verbalizer.jsonl")
    write_effective_config(cfg, out)
    print(f"wrote benchmark for {len(benchmark.languages)} languages to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    seeds = tuple(args.seeds or DEFAULT_SEEDS)
    benchmark = make_benchmark(cfg)
    reports = []
    for seed in seeds:
        model, log, report = run_few_shot(cfg, seed, benchmark)
        save_checkpoint(model, out / f"model_seed{seed}.ckpt")
        write_training_log(log, out / f"train_log_seed{seed}.csv")
        reports.append(report)
        print(f"seed {seed}: dev-best epoch {log.selected_epoch}, "
              f"test AVG {report.average:.4f}")
    mean = mean_report(reports)
    write_report({f"{cfg.shots}-shot": (mean, reports)}, out / "report.csv")
    write_effective_config(cfg, out, {"seeds": list(seeds)})
    print(f"mean AVG over {len(seeds)} seeds: {mean.average:.4f}")
    return 0


def cmd_eval(args) -> int:
    from .model import load_checkpoint
    from .training import evaluate

    cfg = build_config(args)
    out = resolve_out(args.out)
    benchmark = make_benchmark(cfg)
    vocab = build_vocabulary(benchmark, num_soft_slots=max(16, cfg.prompt.soft_len))
    mv = build_verbalizer(benchmark, vocab, multilingual=cfg.multilingual_verbalizer)
    model = load_checkpoint(args.checkpoint)
    test_sets = {lang: benchmark.datasets[lang]["test"] for lang in benchmark.languages}
    report = evaluate(model, test_sets, mv, cfg.prompt, vocab, lang_mode=cfg.eval_lang_mode)
    write_report({"eval": (report, [report])}, out / "eval_report.csv")
    write_effective_config(cfg, out, {"checkpoint": str(args.checkpoint)})
    print(f"AVG accuracy {report.average:.4f}")
    return 0


def cmd_ablate(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    seeds = tuple(args.seeds or DEFAULT_SEEDS)
    results = run_ablations(cfg, seeds)
    write_report(results, out / "ablation.csv")
    write_effective_config(cfg, out, {"seeds": list(seeds)})
    for name in ABLATION_NAMES:
        print(f"{name}: AVG {results[name][0].average:.4f}")
    return 0


def cmd_sweep_prompt_len(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    seeds = tuple(args.seeds or DEFAULT_SEEDS)
    lengths = tuple(args.lengths)
    results = run_prompt_length_sweep(cfg, lengths, seeds)
    write_report(
        {f"len={n}": res for n, res in results.items()}, out / "prompt_length.csv"
    )
    write_effective_config(cfg, out, {"seeds": list(seeds), "lengths": list(lengths)})
    for n, (mean, _) in results.items():
        print(f"soft length {n}: AVG {mean.average:.4f}")
    return 0


def cmd_sweep_cs_lang(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    seeds = tuple(args.seeds or DEFAULT_SEEDS)
    results = run_cs_language_sweep(cfg, seeds)
    write_report(results, out / "cs_language.csv")
    write_effective_config(cfg, out, {"seeds": list(seeds)})
    for name, (mean, _) in results.items():
        print(f"{name}: AVG {mean.average:.4f}")
    return 0


def cmd_grid(args) -> int:
    cfg = build_config(args)
    out = resolve_out(args.out)
    seeds = tuple(args.seeds or DEFAULT_SEEDS)
    shot_counts = tuple(args.shot_counts)
    results = run_shot_grid(cfg, shot_counts, seeds)
    write_report({f"{k}-shot": res for k, res in results.items()}, out / "grid.csv")
    write_effective_config(
        cfg, out, {"seeds": list(seeds), "shot_counts": list(shot_counts)}
    )
    for k, (mean, _) in results.items():
        print(f"{k}-shot: AVG {mean.average:.4f}")
    return 0


def cmd_dump_questions(args) -> int:
    cfg = build_config(args)
    benchmark = make_benchmark(cfg)
    vocab = build_vocabulary(benchmark, num_soft_slots=max(16, cfg.prompt.soft_len))
    pivot_train = benchmark.datasets[PIVOT_LANG]["train"]
    sample = sample_few_shot(pivot_train, max(1, args.count // 3), seed=1)
    dicts = tuple(benchmark.dictionaries.values())
    cs_cfg = CodeSwitchConfig(rate=cfg.cs_rate, dictionaries=dicts)
    for i, ex in enumerate(sample.examples[: args.count]):
        question = build_cloze_question(ex, cfg.prompt, vocab)
        print(f"[{ex.label.value}] {' '.join(vocab.decode(question.token_ids))}")
        if cfg.cs_rate > 0:
            rng = np.random.default_rng([derive_seed(1, i), cs_cfg.salt])
            switched = code_switch_sentence(ex.premise, cs_cfg, rng)
            print(f"    premise view: {switched.annotated()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptnli",
        description="Cloze-style soft-prompt cross-lingual NLI on a synthetic benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic multilingual benchmark")
    add_experiment_flags(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="few-shot training plus evaluation")
    add_experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    add_experiment_flags(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the ablation suite")
    add_experiment_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep-prompt-len", help="accuracy vs soft-prompt length")
    add_experiment_flags(p)
    p.add_argument("--lengths", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    p.set_defaults(func=cmd_sweep_prompt_len)

    p = sub.add_parser("sweep-cs-lang", help="fixed-language vs random code-switching")
    add_experiment_flags(p)
    p.set_defaults(func=cmd_sweep_cs_lang)

    p = sub.add_parser("grid", help="full shots-by-seeds protocol grid")
    add_experiment_flags(p)
    p.add_argument(
        "--shot-counts", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32, 64, 128, 256]
    )
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("dump-questions", help="print rendered cloze templates")
    p.add_argument("--config", type=Path)
    for flag, (_, field, typ) in _OVERRIDE_FLAGS.items():
        p.add_argument(f"--{flag}", type=typ, default=None, dest=field)
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_dump_questions)

    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
