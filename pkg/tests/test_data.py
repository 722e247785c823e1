import json

import numpy as np
import pytest

from promptnli.data import (
    PIVOT_LANG,
    ConfigError,
    DataError,
    Label,
    LabeledDataset,
    NliExample,
    gen_synthetic_benchmark,
    load_dataset,
    load_dictionary,
    sample_few_shot,
    save_dataset,
    save_dictionary,
)


def _write_jsonl(path, records):
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


class TestLoadDataset:
    def test_parses_in_file_order(self, tmp_path):
        path = tmp_path / "data.jsonl"
        _write_jsonl(path, [
            {"premise": "a b", "hypothesis": "c", "label": "entailment", "language": "en"},
            {"premise": "d", "hypothesis": "e f", "label": "NEUTRAL", "language": "en"},
            {"premise": "g", "hypothesis": "h", "label": "Contradiction", "language": "en"},
        ])
        ds = load_dataset(path)
        assert len(ds) == 3
        assert [ex.label for ex in ds] == [
            Label.ENTAILMENT, Label.NEUTRAL, Label.CONTRADICTION,
        ]
        assert ds.examples[0].premise == ("a", "b")

    def test_unknown_label_names_line(self, tmp_path):
        path = tmp_path / "data.jsonl"
        _write_jsonl(path, [
            {"premise": "a", "hypothesis": "b", "label": "entailment", "language": "en"},
            {"premise": "a", "hypothesis": "b", "label": "maybe", "language": "en"},
        ])
        with pytest.raises(DataError, match="line 2"):
            load_dataset(path)

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "data.jsonl"
        _write_jsonl(path, [{"premise": "a", "label": "entailment", "language": "en"}])
        with pytest.raises(DataError, match="hypothesis"):
            load_dataset(path)

    def test_round_trip_is_lossless(self, tmp_path, benchmark):
        # round-trip oracle: byte comparison of the canonical serialization
        ds = benchmark.datasets[PIVOT_LANG]["train"]
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_dataset(ds, first)
        save_dataset(load_dataset(first), second)
        assert first.read_bytes() == second.read_bytes()
        assert load_dataset(second) == load_dataset(first)


class TestLoadDictionary:
    def test_basic_pairs(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("men\tMänner\nrace\tRennen\n", encoding="utf-8")
        d = load_dictionary(path, "en", "de")
        assert len(d) == 2
        assert d.lookup("men") == "Männer"

    def test_duplicate_first_wins(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("men\tMänner\nmen\tHerren\n", encoding="utf-8")
        assert load_dictionary(path, "en", "de").lookup("men") == "Männer"

    def test_absent_word_is_not_an_error(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("men\tMänner\n", encoding="utf-8")
        assert load_dictionary(path, "en", "de").lookup("bicycle") is None

    def test_lookup_folds_case(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("Men\tMänner\n", encoding="utf-8")
        assert load_dictionary(path, "en", "de").lookup("MEN") == "Männer"

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            load_dictionary(path, "en", "de")

    def test_malformed_lines_counted(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("men\tMänner\nbroken\n", encoding="utf-8")
        d = load_dictionary(path, "en", "de")
        assert len(d) == 1 and d.skipped_lines == 1

    def test_save_round_trip(self, tmp_path, benchmark):
        d = benchmark.dictionaries["l1"]
        path = tmp_path / "dict.tsv"
        save_dictionary(d, path)
        again = load_dictionary(path, d.source_lang, d.target_lang)
        assert again.entries == d.entries


class TestFewShotSampler:
    def test_class_balance(self, benchmark):
        ds = benchmark.datasets[PIVOT_LANG]["train"]
        for k in (1, 2, 8):
            sample = sample_few_shot(ds, k, seed=3)
            counts = {lab: len(exs) for lab, exs in sample.by_label().items()}
            assert all(c == k for c in counts.values())
            assert len(sample) == 3 * k

    def test_deterministic_per_seed(self, benchmark):
        ds = benchmark.datasets[PIVOT_LANG]["train"]
        assert sample_few_shot(ds, 4, seed=1) == sample_few_shot(ds, 4, seed=1)

    def test_seeds_differ(self, benchmark):
        ds = benchmark.datasets[PIVOT_LANG]["train"]
        samples = {tuple(sample_few_shot(ds, 1, seed=s).examples) for s in range(20)}
        assert len(samples) > 1

    def test_insufficient_class_named(self):
        examples = tuple(
            NliExample(("a",), ("b",), lab, "en")
            for lab in (Label.ENTAILMENT, Label.ENTAILMENT, Label.NEUTRAL,
                        Label.NEUTRAL, Label.CONTRADICTION)
        )
        with pytest.raises(DataError, match="CONTRADICTION"):
            sample_few_shot(LabeledDataset(examples), 2, seed=0)


class TestSyntheticBenchmark:
    def test_deterministic(self):
        kwargs = dict(num_languages=2, vocab_size=50,
                      examples_per_split={"train": 30}, seed=7)
        assert gen_synthetic_benchmark(**kwargs) == gen_synthetic_benchmark(**kwargs)

    def test_entailment_subset_rule(self, benchmark):
        for lang in benchmark.languages:
            for ex in benchmark.datasets[lang]["train"]:
                if ex.label is Label.ENTAILMENT:
                    assert set(ex.hypothesis) <= set(ex.premise)

    def test_dictionary_translation_matches_generated_sets(self, benchmark):
        # bijection oracle: pivot test set translated word-by-word must equal
        # the generated target-language test set
        pivot = benchmark.datasets[PIVOT_LANG]["test"]
        for lang, d in benchmark.dictionaries.items():
            generated = benchmark.datasets[lang]["test"]
            for src, tgt in zip(pivot, generated):
                assert tuple(d.lookup(w) for w in src.premise) == tgt.premise
                assert tuple(d.lookup(w) for w in src.hypothesis) == tgt.hypothesis

    def test_dictionaries_are_bijections(self, benchmark):
        for d in benchmark.dictionaries.values():
            values = list(d.entries.values())
            assert len(values) == len(set(values))

    def test_labels_balanced(self, benchmark):
        counts = benchmark.datasets[PIVOT_LANG]["train"].by_label()
        sizes = {len(v) for v in counts.values()}
        assert len(sizes) == 1

    def test_too_few_languages(self):
        with pytest.raises(ConfigError):
            gen_synthetic_benchmark(1, 60, {"train": 3}, seed=0)

    def test_vocab_too_small(self):
        with pytest.raises(ConfigError):
            gen_synthetic_benchmark(2, 20, {"train": 3}, seed=0)

    def test_length_distributions_are_label_free(self):
        # lexical content, not surface length, must carry the label
        b = gen_synthetic_benchmark(2, 60, {"train": 3000}, seed=11)
        by_label = b.datasets[PIVOT_LANG]["train"].by_label()
        means = {
            lab: np.mean([len(ex.hypothesis) for ex in exs])
            for lab, exs in by_label.items()
        }
        spread = max(means.values()) - min(means.values())
        assert spread < 0.25, means
