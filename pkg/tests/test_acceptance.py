"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single PASS/FAIL line
(run with ``-s`` to see them as they complete).  The ablation block trains
twenty models and dominates the runtime.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
import torch

from promptnli.augment import CodeSwitchConfig, code_switch_sentence
from promptnli.cli import run_command
from promptnli.data import (
    PIVOT_LANG,
    BilingualDictionary,
    Label,
    gen_synthetic_benchmark,
    sample_few_shot,
)
from promptnli.model import ClozeEncoder, ModelConfig, state_digest
from promptnli.objective import (
    LossWeights,
    batch_ce,
    instance_ce,
    kl_consistency,
    total_loss,
)
from promptnli.pipeline import (
    ExperimentConfig,
    ablation_config,
    build_verbalizer,
    build_vocabulary,
    make_benchmark,
    run_few_shot_seeds,
    run_prompt_length_sweep,
    target_language_mean,
)
from promptnli.prompting import PromptConfig
from promptnli.training import TrainConfig, _dataset_accuracy, evaluate, train
from promptnli.verbalizer import MultilingualVerbalizer, Verbalizer
from promptnli.vocab import SPECIALS

SEEDS = (1, 2, 3, 4, 5)


def _verdict(name: str, ok: bool, detail: str = ""):
    suffix = f"  ({detail})" if detail else ""
    print(f"\n{'PASS' if ok else 'FAIL'}: {name}{suffix}")
    assert ok, f"{name}{suffix}"


# A small benchmark reused by the fast protocol criteria (6 and 8).  Sized so
# the largest shot count (256 per class) still fits the train and dev pools.
SMALL = {
    "num_languages": 2,
    "vocab_size": 50,
    "train_size": 810,
    "dev_size": 810,
    "test_size": 30,
    "dim": 8,
    "heads": 2,
    "ffn_dim": 12,
    "layers": 1,
    "prompt": PromptConfig(soft_len=2, max_len=64),
    "trainer": TrainConfig(epochs=2, batch_size=32),
}


def test_criterion_1_gradients_match_finite_differences():
    start = time.time()
    mv = MultilingualVerbalizer({
        "a": Verbalizer("a", {Label.ENTAILMENT: 5, Label.CONTRADICTION: 6,
                              Label.NEUTRAL: 7}),
        "b": Verbalizer("b", {Label.ENTAILMENT: 8, Label.CONTRADICTION: 9,
                              Label.NEUTRAL: 10}),
    })
    cfg = ModelConfig(vocab_size=20, dim=8, layers=1, heads=2, ffn_dim=12,
                      max_len=16, num_soft_slots=2)
    model = ClozeEncoder(cfg, seed=1)
    weights = LossWeights(1.0, 1.0, 0.5)
    ids_a = torch.tensor([[2, 11, 12, 4, 3], [2, 13, 14, 4, 3]])
    ids_b = torch.tensor([[2, 12, 11, 4, 3], [2, 14, 13, 4, 3]])
    pos = torch.tensor([3, 3])
    labels = [Label.ENTAILMENT, Label.NEUTRAL]

    def loss():
        pa, _ = model(ids_a, pos)
        pb, _ = model(ids_b, pos)
        return total_loss(list(pa), list(pb), labels, mv, weights).total

    value = loss()
    value.backward()
    params = [p for p in model.parameters() if p.grad is not None]
    analytic = torch.cat([p.grad.flatten() for p in params]).numpy()
    flat = torch.cat([p.detach().flatten() for p in params]).numpy()

    def loss_at(theta):
        offset = 0
        with torch.no_grad():
            for p in params:
                n = p.numel()
                p.copy_(torch.from_numpy(theta[offset:offset + n]).view_as(p))
                offset += n
            return float(loss())

    eps = 1e-6
    fd = np.empty_like(flat)
    for c in range(flat.size):
        theta = flat.copy()
        theta[c] += eps
        hi = loss_at(theta)
        theta[c] -= 2 * eps
        fd[c] = (hi - loss_at(theta)) / (2 * eps)

    rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12)
    elapsed = time.time() - start
    _verdict(
        "gradients match central finite differences",
        rel <= 1e-4 and elapsed < 60,
        f"rel err {rel:.2e} over {flat.size} params, {elapsed:.1f}s",
    )


def test_criterion_2_loss_identities():
    mv = MultilingualVerbalizer({
        "a": Verbalizer("a", {Label.ENTAILMENT: 0, Label.CONTRADICTION: 1,
                              Label.NEUTRAL: 2}),
        "b": Verbalizer("b", {Label.ENTAILMENT: 3, Label.CONTRADICTION: 4,
                              Label.NEUTRAL: 5}),
    })
    worked = float(instance_ce(
        np.array([0.4, 0.05, 0.05, 0.1, 0.2, 0.2]), Label.ENTAILMENT, mv
    ))
    ok_worked = abs(worked - 1.6094) <= 1e-4

    rng = np.random.default_rng(0)
    ok_zero = ok_sym = True
    for _ in range(1000):
        p = rng.random(8) + 1e-3
        p /= p.sum()
        q = rng.random(8) + 1e-3
        q /= q.sum()
        ok_zero &= abs(float(kl_consistency(p, p))) <= 1e-12
        ok_sym &= abs(float(kl_consistency(p, q)) - float(kl_consistency(q, p))) <= 1e-12

    dists = rng.random((12, 6)) + 1e-3
    dists /= dists.sum(axis=1, keepdims=True)
    labels = [list(Label)[i % 3] for i in range(12)]
    oracle = np.mean([
        -np.mean([math.log(d[v[lab]]) for v in mv.verbalizers.values()])
        for d, lab in zip(dists, labels)
    ])
    ok_batch = abs(float(batch_ce(list(dists), labels, mv)) - oracle) <= 1e-12

    _verdict(
        "loss identities hold",
        ok_worked and ok_zero and ok_sym and ok_batch,
        f"worked case {worked:.4f}",
    )


def test_criterion_3_code_switch_counting_law():
    words = tuple(f"w{i}" for i in range(10))
    full = BilingualDictionary("en", "xx", {w: w + "_x" for w in words})
    cfg = CodeSwitchConfig(rate=0.3, dictionaries=(full,))
    ok_count = all(
        sum(a != b for a, b in zip(
            words, code_switch_sentence(words, cfg, np.random.default_rng(s)).words
        )) == 3
        and len(code_switch_sentence(words, cfg, np.random.default_rng(s)).words) == 10
        for s in range(1000)
    )
    zero = CodeSwitchConfig(rate=0.0, dictionaries=(full,))
    ok_zero = code_switch_sentence(words, zero, np.random.default_rng(0)).words == words
    one = CodeSwitchConfig(rate=1.0, dictionaries=(full,))
    ok_one = code_switch_sentence(words, one, np.random.default_rng(0)).words == tuple(
        w + "_x" for w in words
    )
    _verdict(
        "code-switch replacement law (1000 seeds)",
        ok_count and ok_zero and ok_one,
    )


def test_criterion_4_ablation_direction():
    start = time.time()
    cfg = ExperimentConfig(shots=64)
    cfg = replace(cfg, trainer=replace(cfg.trainer, epochs=50))
    benchmark = make_benchmark(cfg)
    names = ("Original", "w/o code-switched", "w/o consistency loss",
             "w/o multilingual verbalizer")
    means = {}
    for name in names:
        mean, _ = run_few_shot_seeds(ablation_config(cfg, name), SEEDS, benchmark)
        means[name] = target_language_mean(mean)
    elapsed = time.time() - start
    margins = {n: means["Original"] - means[n] for n in names[1:]}
    ok = all(m >= 0 for m in margins.values()) and elapsed <= 900
    detail = ", ".join(
        [f"full {means['Original']:.3f}"]
        + [f"{n} {means[n]:.3f}" for n in names[1:]]
        + [f"{elapsed:.0f}s"]
    )
    _verdict("full method beats every ablation (5-seed mean)", ok, detail)


def test_criterion_5_prompt_init_and_freezing():
    benchmark = gen_synthetic_benchmark(
        2, 50, {"train": 60, "dev": 30, "test": 30}, seed=3
    )
    vocab = build_vocabulary(benchmark)
    mv = build_verbalizer(benchmark, vocab)
    model = ClozeEncoder(
        ModelConfig(vocab_size=len(vocab), dim=16, layers=1, heads=2, ffn_dim=24,
                    max_len=64, num_soft_slots=vocab.num_soft_slots),
        seed=2,
    )
    lexicon_start = len(SPECIALS) + vocab.num_soft_slots
    mean = model.embedding.weight[lexicon_start:].mean(dim=0)
    ok_init = all(
        torch.equal(row, mean) for row in model.embedding.weight[model.slot_ids]
    )

    model.set_prompt_trainable(False)
    before = model.embedding.weight[model.slot_ids].clone()
    digest_before = state_digest(model)
    evaluate(model, {l: benchmark.datasets[l]["test"] for l in benchmark.languages},
             mv, PromptConfig(soft_len=2, max_len=64), vocab)
    ok_frozen = (
        torch.equal(model.embedding.weight[model.slot_ids], before)
        and state_digest(model) == digest_before
    )
    _verdict("prompt rows init to the exact vocabulary mean and stay frozen",
             ok_init and ok_frozen)


def test_criterion_6_protocol_grid_and_determinism(tmp_path):
    import json

    cfg_path = tmp_path / "small.json"
    payload = {k: v for k, v in SMALL.items() if k not in ("prompt", "trainer")}
    payload["prompt"] = {"soft_len": 2, "max_len": 64}
    payload["trainer"] = {"epochs": 2, "batch_size": 32}
    cfg_path.write_text(json.dumps(payload))

    out = tmp_path / "grid"
    code = run_command([
        "grid", "--config", str(cfg_path),
        "--shot-counts", "1", "2", "4", "8", "16", "32", "64", "128", "256",
        "--seeds", "1", "2", "3", "4", "5", "--out", str(out),
    ])
    report = (out / "grid.csv").read_text()
    rows = [line for line in report.strip().splitlines() if "-shot" in line]
    ok_shape = code == 0 and len(rows) == 9 and "AVG" in report

    reruns = []
    for name in ("a", "b"):
        sub = tmp_path / name
        assert run_command([
            "grid", "--config", str(cfg_path), "--shot-counts", "8",
            "--seeds", "1", "2", "3", "4", "5", "--out", str(sub),
        ]) == 0
        reruns.append((sub / "grid.csv").read_bytes())
    ok_bytes = reruns[0] == reruns[1]
    # the rerun's 8-shot row must also reproduce the full grid's 8-shot row
    eight = next(line for line in report.splitlines() if line.startswith("8-shot"))
    ok_cell = eight in reruns[0].decode()
    _verdict(
        "full shots-by-seeds grid runs and reruns byte-identically",
        ok_shape and ok_bytes and ok_cell,
    )


def test_criterion_7_overfit_sanity():
    cfg = ExperimentConfig()  # default configuration, 8 shots
    benchmark = make_benchmark(cfg)
    vocab = build_vocabulary(benchmark)
    mv = build_verbalizer(benchmark, vocab)
    cs = CodeSwitchConfig(
        rate=cfg.cs_rate, dictionaries=tuple(benchmark.dictionaries.values())
    )
    accs = {}
    for seed in SEEDS:
        data = sample_few_shot(benchmark.datasets[PIVOT_LANG]["train"], cfg.shots, seed)
        model = ClozeEncoder(
            ModelConfig(vocab_size=len(vocab), dim=cfg.dim, layers=cfg.layers,
                        heads=cfg.heads, ffn_dim=cfg.ffn_dim,
                        max_len=cfg.prompt.max_len,
                        num_soft_slots=vocab.num_soft_slots),
            seed=seed,
        )
        tc = replace(cfg.trainer, seed=seed)
        model, _ = train(model, data, data, mv, cfg.prompt, cs, tc, vocab)
        accs[seed] = _dataset_accuracy(model, data, mv, cfg.prompt, vocab)
    ok = all(acc >= 0.99 for acc in accs.values())
    _verdict(
        "8-shot training reaches 99% train accuracy for every seed",
        ok, ", ".join(f"s{s}={a:.3f}" for s, a in accs.items()),
    )


def test_criterion_8_prompt_length_sweep():
    cfg = ExperimentConfig(
        shots=4,
        num_languages=SMALL["num_languages"], vocab_size=SMALL["vocab_size"],
        train_size=120, dev_size=60, test_size=30,
        dim=SMALL["dim"], heads=SMALL["heads"], ffn_dim=SMALL["ffn_dim"],
        layers=SMALL["layers"],
        prompt=SMALL["prompt"], trainer=SMALL["trainer"],
    )
    lengths = (1, 2, 4, 8, 16)
    runs = []
    for _ in range(2):
        results = run_prompt_length_sweep(cfg, lengths, seeds=(1, 2))
        runs.append({n: mean.per_language for n, (mean, _) in results.items()})
    ok = tuple(runs[0]) == lengths and runs[0] == runs[1]
    _verdict("prompt-length sweep covers all lengths deterministically", ok)
