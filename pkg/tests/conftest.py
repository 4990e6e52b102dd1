import random

import pytest

from pepgate.sequences import AMINO_ACIDS, ProteinSequence


def make_sequence(rng: random.Random, min_len=1, max_len=80) -> ProteinSequence:
    n = rng.randint(min_len, max_len)
    return ProteinSequence("".join(rng.choice(AMINO_ACIDS) for _ in range(n)))


def make_corpus(seed: int, count: int, min_len=30, max_len=60) -> list[ProteinSequence]:
    rng = random.Random(seed)
    return [make_sequence(rng, min_len, max_len) for _ in range(count)]


@pytest.fixture(scope="session")
def reference_corpus():
    """Medium corpus that gives every amino acid a healthy point cloud."""
    return make_corpus(90125, 150, min_len=40, max_len=70)
