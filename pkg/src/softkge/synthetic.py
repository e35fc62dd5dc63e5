"""Synthetic knowledge graphs with a planted exact translational embedding.

Each relation gets a head group of p entities and a tail group of q
entities with p * q = triples_per_relation, and every (head, tail) pair is
emitted. Entities in a group share one planted base vector and the tail
base is exactly head base + relation vector, so at noise 0 every emitted
triple scores exactly 0 under either norm. Because all pairs are present,
filtered evaluation removes every tied groupmate and the planted table
ranks the true entity first with no ties, an end-to-end oracle for the
whole pipeline.

Base vectors live on the grid k/1024 with |k| <= 1024, which float32
represents exactly: the planted scores survive a checkpoint round-trip
bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .datasets import SplitDataset, Vocab, build_dataset
from .errors import DataError
from .model import EmbeddingTable

_GRID = 1024


def _group_sums(triples_per_relation: int, num_entities: int) -> dict:
    # p + T/p is injective over divisors p <= sqrt(T), so each feasible
    # group-size sum maps to exactly one (p, q) shape.
    out = {}
    p = 1
    while p * p <= triples_per_relation:
        if triples_per_relation % p == 0:
            q = triples_per_relation // p
            if p + q <= num_entities:
                out[p + q] = (p, q)
        p += 1
    return out


def _plan_groups(num_entities: int, num_relations: int, triples_per_relation: int):
    """Pick a (p, q) per relation so the groups exactly cover all entities.

    Subset-sum reachability over the feasible sums, then a greedy sweep
    that prefers the smallest (most balanced) sum at each relation.
    """
    by_sum = _group_sums(triples_per_relation, num_entities)
    sums = sorted(by_sum)
    reach = np.zeros((num_relations + 1, num_entities + 1), dtype=bool)
    reach[num_relations, 0] = True
    for j in range(num_relations - 1, -1, -1):
        for s in sums:
            reach[j, s:] |= reach[j + 1, : num_entities + 1 - s]
    if not reach[0, num_entities]:
        raise DataError(
            f"cannot cover {num_entities} entities with {num_relations} disjoint "
            f"head/tail groups of {triples_per_relation} triples each"
        )
    plan = []
    remaining = num_entities
    for j in range(num_relations):
        for s in sums:
            if s <= remaining and reach[j + 1, remaining - s]:
                plan.append(by_sum[s])
                remaining -= s
                break
    return plan


def _fresh_grid_vector(rng, dim: int, seen: set) -> np.ndarray:
    while True:
        vec = rng.integers(-_GRID, _GRID + 1, size=dim) / _GRID
        if vec.tobytes() not in seen:
            seen.add(vec.tobytes())
            return vec


def generate_synthetic(
    num_entities: int,
    num_relations: int,
    dim: int,
    triples_per_relation: int,
    noise: float,
    seed: int,
):
    """Build a planted KG; returns (vocab, dataset, planted_table).

    ``noise`` bounds the planted score of every emitted triple: each entity
    vector is jittered componentwise by at most noise/(2 dim), so the L1
    residual (and hence the L2 one) stays <= noise. The triple list is
    shuffled under the seed and split 80/10/10.
    """
    if min(num_entities, num_relations, dim, triples_per_relation) <= 0:
        raise DataError("synthetic counts and dim must all be positive")
    if noise < 0:
        raise DataError(f"noise must be non-negative, got {noise}")
    if triples_per_relation > num_entities * num_entities:
        raise DataError(
            f"{triples_per_relation} triples per relation exceed the "
            f"{num_entities * num_entities} distinct pairs available"
        )
    plan = _plan_groups(num_entities, num_relations, triples_per_relation)

    rng = np.random.default_rng(seed)
    seen: set = set()
    entity_vecs = {}
    relation_vecs = {}
    triples = []
    next_entity = 0
    half_width = noise / (2.0 * dim)
    for r, (p, q) in enumerate(plan):
        head_base = _fresh_grid_vector(rng, dim, seen)
        tail_base = _fresh_grid_vector(rng, dim, seen)
        relation_vecs[f"r{r}"] = tail_base - head_base
        heads = list(range(next_entity, next_entity + p))
        tails = list(range(next_entity + p, next_entity + p + q))
        next_entity += p + q
        for e in heads:
            jitter = rng.uniform(-half_width, half_width, size=dim) if noise > 0 else 0.0
            entity_vecs[f"e{e}"] = head_base + jitter
        for e in tails:
            jitter = rng.uniform(-half_width, half_width, size=dim) if noise > 0 else 0.0
            entity_vecs[f"e{e}"] = tail_base + jitter
        for h in heads:
            for t in tails:
                triples.append((f"e{h}", f"r{r}", f"e{t}"))

    order = rng.permutation(len(triples))
    shuffled = [triples[i] for i in order]
    n_train = int(len(shuffled) * 0.8)
    n_valid = int(len(shuffled) * 0.1)
    vocab, dataset = build_dataset(
        shuffled[:n_train],
        shuffled[n_train : n_train + n_valid],
        shuffled[n_train + n_valid :],
    )

    entities = np.empty((vocab.n_entities, dim))
    for label, vec in entity_vecs.items():
        entities[vocab.entity_id(label)] = vec
    relations = np.empty((vocab.n_relations, dim))
    for label, vec in relation_vecs.items():
        relations[vocab.relation_id(label)] = vec
    return vocab, dataset, EmbeddingTable(entities, relations)
