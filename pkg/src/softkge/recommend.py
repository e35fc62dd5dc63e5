"""Top-k link recommendation from a trained model.

A query fixes a source entity and a relation and ranks every other entity
as a candidate tail by score. The batch report mirrors a recommendation
worksheet: ranks are positions in the query's full candidate list, and
targets already linked to the source are dropped from the reported set, so
the surviving ranks show where the novel suggestions sat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .datasets import SplitDataset, Vocab
from .model import EmbeddingTable


@dataclass(frozen=True)
class Recommendation:
    source: int
    relation: int
    target: int
    score: float
    rank: int


@dataclass(frozen=True)
class TopK:
    """Query result; ``truncated`` flags k exceeding the candidate pool."""

    items: tuple
    truncated: bool = False

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


def top_k(
    model: EmbeddingTable,
    source: int,
    relation: int,
    k: int,
    known: SplitDataset,
    exclude_known: bool = True,
) -> TopK:
    """The k best-scored (source, relation, target) candidates.

    Candidates are every entity except the source itself; with
    ``exclude_known`` targets already forming a known triple are dropped.
    Ties order by ascending entity id. Ranks are 1-based positions in the
    returned list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = model.entities[source] + model.relations[relation]
    dists = kernels.candidate_distances(model.entities, query, model.l1)
    keep = np.ones(model.n_entities, dtype=bool)
    keep[source] = False
    if exclude_known:
        known_targets = known.known_tails().get((int(source), int(relation)))
        if known_targets is not None:
            keep[known_targets] = False
    ids = np.flatnonzero(keep)
    order = np.lexsort((ids, dists[ids]))
    chosen = ids[order[:k]]
    items = tuple(
        Recommendation(
            source=int(source),
            relation=int(relation),
            target=int(e),
            score=float(dists[e]),
            rank=rank,
        )
        for rank, e in enumerate(chosen, start=1)
    )
    return TopK(items=items, truncated=k > ids.size)


@dataclass
class ReportRow:
    source_label: str
    recommendations: tuple

    @property
    def ranks(self) -> list:
        return [rec.rank for rec in self.recommendations]


@dataclass
class RecommendReport:
    rows: list

    HEADER = "source\tn_recommendations\tranks"
    LONG_HEADER = "source\ttarget\tscore\trank"

    def to_text(self) -> str:
        lines = [self.HEADER]
        for row in self.rows:
            ranks = ", ".join(str(r) for r in row.ranks)
            lines.append(f"{row.source_label}\t{len(row.recommendations)}\t{ranks}")
        return "\n".join(lines) + "\n"

    def to_long_text(self, vocab: Vocab) -> str:
        lines = [self.LONG_HEADER]
        for row in self.rows:
            for rec in row.recommendations:
                lines.append(
                    f"{row.source_label}\t{vocab.entity_label(rec.target)}\t"
                    f"{rec.score!r}\t{rec.rank}"
                )
        return "\n".join(lines) + "\n"


def batch_report(
    model: EmbeddingTable,
    sources,
    relation,
    k: int,
    known: SplitDataset,
    vocab: Vocab,
) -> RecommendReport:
    """One report row per source: novel targets among its top k.

    Each source's candidates are ranked without exclusion, the top k taken,
    and targets that already form a known triple with the source dropped;
    the survivors keep their positions from the full ranking, so a row like
    "3 recommendations at ranks 2, 5, 9" means ranks 1, 3, ... were
    already-known links.
    """
    if len(sources) == 0:
        raise ValueError("batch_report needs at least one source")
    rel_id = vocab.relation_id(relation) if isinstance(relation, str) else int(relation)
    rows = []
    for source in sources:
        src_id = vocab.entity_id(source) if isinstance(source, str) else int(source)
        ranking = top_k(model, src_id, rel_id, k, known, exclude_known=False)
        known_targets = known.known_tails().get((src_id, rel_id))
        known_set = set() if known_targets is None else set(int(e) for e in known_targets)
        novel = tuple(rec for rec in ranking if rec.target not in known_set)
        rows.append(ReportRow(source_label=vocab.entity_label(src_id), recommendations=novel))
    return RecommendReport(rows=rows)
