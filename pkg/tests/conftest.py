import numpy as np
import pytest

from softkge import backend
from softkge.datasets import Triple, Vocab, SplitDataset


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Pay the JIT compile cost once, before any timed test runs.
    k = backend.get_kernels()
    ent = np.zeros((3, 4))
    rel = np.zeros((2, 4))
    k.candidate_distances(ent, np.zeros(4), False)
    k.triple_scores(ent, rel, np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1, np.int64), True)
    k.pair_update_batch(
        ent.copy(), rel.copy(), np.zeros((3, 4)), np.zeros((2, 4)),
        np.zeros(1), np.zeros(1),
        np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1, np.int64),
        np.ones(1, np.int64), np.ones(1, np.int64), np.zeros(1, np.int64),
        2, False, 1.0, 0.5, 1.5, 1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-8, True,
    )


def toy_vocab(n_entities=6, n_relations=2):
    return Vocab(
        entity_ids={f"e{i}": i for i in range(n_entities)},
        entity_labels=[f"e{i}" for i in range(n_entities)],
        relation_ids={f"r{i}": i for i in range(n_relations)},
        relation_labels=[f"r{i}" for i in range(n_relations)],
    )


def toy_dataset():
    """Six entities, two relations, a handful of triples per split."""
    train = [Triple(0, 0, 1), Triple(1, 0, 2), Triple(2, 1, 3), Triple(3, 0, 4), Triple(4, 1, 5)]
    valid = [Triple(0, 0, 2), Triple(2, 1, 5)]
    test = [Triple(1, 0, 3), Triple(3, 1, 5)]
    known = set(train) | set(valid) | set(test)
    return SplitDataset(train=train, valid=valid, test=test, known=known)


@pytest.fixture
def small_kg():
    return toy_vocab(), toy_dataset()
