import pytest

from promptnli.data import gen_synthetic_benchmark
from promptnli.pipeline import build_verbalizer, build_vocabulary


@pytest.fixture(scope="session")
def benchmark():
    return gen_synthetic_benchmark(
        num_languages=4,
        vocab_size=60,
        examples_per_split={"train": 120, "dev": 30, "test": 30},
        seed=7,
    )


@pytest.fixture(scope="session")
def vocab(benchmark):
    return build_vocabulary(benchmark)


@pytest.fixture(scope="session")
def verbalizer(benchmark, vocab):
    return build_verbalizer(benchmark, vocab)
