"""Triple datasets: TSV parsing, vocabulary indexing, and train/valid/test splits.

A knowledge graph is a set of (head, relation, tail) facts. Files use one
triple per line, three tab-separated fields, UTF-8, no header, in
head/relation/tail column order. Surface strings are mapped to contiguous
integer ids; everything downstream works on ids.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DataError

RawTriple = tuple[str, str, str]


class Triple(NamedTuple):
    """One (head, relation, tail) fact in integer-id form."""

    head: int
    relation: int
    tail: int


@dataclass
class Vocab:
    """Bidirectional mapping between surface strings and dense integer ids.

    Ids are contiguous, 0..n_entities-1 and 0..n_relations-1, assigned in
    first-appearance order (train split first, then valid, then test).
    """

    entity_ids: dict[str, int] = field(default_factory=dict)
    relation_ids: dict[str, int] = field(default_factory=dict)
    entity_labels: list[str] = field(default_factory=list)
    relation_labels: list[str] = field(default_factory=list)

    @property
    def n_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def n_relations(self) -> int:
        return len(self.relation_labels)

    def entity_id(self, label: str) -> int:
        try:
            return self.entity_ids[label]
        except KeyError:
            raise DataError(f"unknown entity label {label!r}") from None

    def relation_id(self, label: str) -> int:
        try:
            return self.relation_ids[label]
        except KeyError:
            raise DataError(f"unknown relation label {label!r}") from None

    def entity_label(self, eid: int) -> str:
        return self.entity_labels[eid]

    def relation_label(self, rid: int) -> str:
        return self.relation_labels[rid]


@dataclass
class DatasetStats:
    """Bookkeeping surfaced by :func:`build_dataset`.

    ``unseen_entities`` / ``unseen_relations`` count ids that never occur in
    the train split (their embeddings will stay untrained).
    ``duplicates_removed`` counts exact repeats dropped within a split;
    triples repeated across splits are only reported, never corrected.
    """

    unseen_entities: int = 0
    unseen_relations: int = 0
    duplicates_removed: int = 0
    cross_split_duplicates: int = 0

    @property
    def warning_count(self) -> int:
        return self.unseen_entities + self.unseen_relations


@dataclass
class SplitDataset:
    """Train/valid/test triples plus the known-positive set.

    ``known`` is the union of all three splits and backs both filtered
    evaluation and filtered negative sampling. Instances are treated as
    immutable after construction and are safe for concurrent reads.
    """

    train: list[Triple]
    valid: list[Triple]
    test: list[Triple]
    known: set[Triple]
    stats: DatasetStats = field(default_factory=DatasetStats)
    _arrays: dict = field(default_factory=dict, repr=False)
    _indexes: dict = field(default_factory=dict, repr=False)

    def is_known(self, t: Triple) -> bool:
        """True iff ``t`` occurs in train, valid, or test."""
        return tuple(t) in self.known

    def split(self, name: str) -> list[Triple]:
        if name not in ("train", "valid", "test"):
            raise ValueError(f"no split named {name!r}")
        return getattr(self, name)

    def split_array(self, name: str) -> np.ndarray:
        """Triples of one split as an (n, 3) int64 array (cached)."""
        if name not in self._arrays:
            triples = self.split(name)
            arr = np.asarray(triples, dtype=np.int64).reshape(len(triples), 3)
            self._arrays[name] = arr
        return self._arrays[name]

    @property
    def train_set(self) -> set[Triple]:
        """Train triples as a set; the default negative-sampling filter."""
        if "train_set" not in self._indexes:
            self._indexes["train_set"] = set(self.train)
        return self._indexes["train_set"]

    def _pair_index(self, triples: Iterable[Triple], key: str) -> dict:
        index: dict[tuple[int, int], list[int]] = {}
        for h, r, t in triples:
            if key == "tails":
                index.setdefault((h, r), []).append(t)
            else:
                index.setdefault((r, t), []).append(h)
        return {k: np.array(sorted(set(v)), dtype=np.int64) for k, v in index.items()}

    def known_tails(self) -> dict:
        """(head, relation) -> sorted array of known tails, over all splits."""
        if "known_tails" not in self._indexes:
            self._indexes["known_tails"] = self._pair_index(self.known, "tails")
        return self._indexes["known_tails"]

    def known_heads(self) -> dict:
        """(relation, tail) -> sorted array of known heads, over all splits."""
        if "known_heads" not in self._indexes:
            self._indexes["known_heads"] = self._pair_index(self.known, "heads")
        return self._indexes["known_heads"]

    def train_tails(self) -> dict:
        if "train_tails" not in self._indexes:
            self._indexes["train_tails"] = self._pair_index(self.train, "tails")
        return self._indexes["train_tails"]

    def train_heads(self) -> dict:
        if "train_heads" not in self._indexes:
            self._indexes["train_heads"] = self._pair_index(self.train, "heads")
        return self._indexes["train_heads"]


def parse_tsv(path: str | os.PathLike) -> list[RawTriple]:
    """Read raw string triples from a TSV file, preserving file order.

    Empty lines are skipped. Any other line must contain exactly three
    tab-separated fields; violations raise :class:`DataError` carrying the
    1-based line number.
    """
    triples: list[RawTriple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(fields)}",
                    lineno=lineno,
                )
            triples.append((fields[0], fields[1], fields[2]))
    return triples


def build_dataset(
    train: list[RawTriple],
    valid: list[RawTriple],
    test: list[RawTriple],
) -> tuple[Vocab, SplitDataset]:
    """Index raw string triples into a vocabulary and an id-level dataset.

    Every entity and relation mentioned in any split gets an id; ids found
    only in valid/test are kept and counted in the returned stats so callers
    can warn about untrained embeddings. Exact duplicates within one split
    are dropped (and counted); a triple present in several splits is kept
    and only counted.
    """
    vocab = Vocab()
    stats = DatasetStats()

    def intern(label: str, ids: dict, labels: list, in_train: bool, what: str) -> int:
        if not label:
            raise DataError(f"empty {what} label in input triples")
        if label in ids:
            return ids[label]
        ids[label] = len(labels)
        labels.append(label)
        if not in_train:
            if what == "entity":
                stats.unseen_entities += 1
            else:
                stats.unseen_relations += 1
        return ids[label]

    splits: dict[str, list[Triple]] = {}
    seen_elsewhere: set[Triple] = set()
    for name, raw in (("train", train), ("valid", valid), ("test", test)):
        in_train = name == "train"
        out: list[Triple] = []
        seen_here: set[Triple] = set()
        for h, r, t in raw:
            triple = Triple(
                intern(h, vocab.entity_ids, vocab.entity_labels, in_train, "entity"),
                intern(r, vocab.relation_ids, vocab.relation_labels, in_train, "relation"),
                intern(t, vocab.entity_ids, vocab.entity_labels, in_train, "entity"),
            )
            if triple in seen_here:
                stats.duplicates_removed += 1
                continue
            if triple in seen_elsewhere:
                stats.cross_split_duplicates += 1
            seen_here.add(triple)
            out.append(triple)
        seen_elsewhere |= seen_here
        splits[name] = out

    known = set(splits["train"]) | set(splits["valid"]) | set(splits["test"])
    dataset = SplitDataset(splits["train"], splits["valid"], splits["test"], known, stats)
    return vocab, dataset


def write_splits(vocab: Vocab, dataset: SplitDataset, out_dir: str | os.PathLike) -> None:
    """Serialize the three splits back to train/valid/test TSV files."""
    os.makedirs(out_dir, exist_ok=True)
    for name in ("train", "valid", "test"):
        with open(os.path.join(out_dir, f"{name}.tsv"), "w", encoding="utf-8") as fh:
            for h, r, t in dataset.split(name):
                fh.write(
                    f"{vocab.entity_label(h)}\t{vocab.relation_label(r)}"
                    f"\t{vocab.entity_label(t)}\n"
                )


def write_vocab(vocab: Vocab, out_dir: str | os.PathLike) -> None:
    """Dump the vocabulary as entities.tsv / relations.tsv (id, label), ids ascending."""
    os.makedirs(out_dir, exist_ok=True)
    for fname, labels in (("entities.tsv", vocab.entity_labels),
                          ("relations.tsv", vocab.relation_labels)):
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as fh:
            for idx, label in enumerate(labels):
                fh.write(f"{idx}\t{label}\n")


def load_dataset(
    train_path: str | os.PathLike,
    valid_path: str | os.PathLike,
    test_path: str | os.PathLike,
) -> tuple[Vocab, SplitDataset]:
    """Parse three TSV files and build the indexed dataset."""
    return build_dataset(parse_tsv(train_path), parse_tsv(valid_path), parse_tsv(test_path))
