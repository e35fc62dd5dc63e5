"""Link-prediction protocol: raw and filtered Mean Rank and Hits@k.

Both sides of a test triple are scored by replacing one entity with every
candidate: tail candidates are ranked by distance to h + r, head candidates
by distance to t - r. One distance vector per side serves both the raw and
the filtered rank.

Tie handling is the expected rank under random tie-breaking:
rank = 1 + (#strictly lower) + floor(#ties excluding the true entity / 2).
Optimistic ranking would flatter degenerate models and is not offered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .datasets import SplitDataset, Triple, Vocab
from .model import EmbeddingTable

SIDES = ("head", "tail")


@dataclass
class EvalReport:
    split: str
    observations: int
    mr_raw: float
    mr_filtered: float
    hits_at_k_raw: dict
    hits_at_k_filtered: dict
    per_triple_ranks: list

    def to_text(self) -> str:
        lines = [
            f"split={self.split}",
            f"observations={self.observations}",
            f"mr_raw={self.mr_raw!r}",
            f"mr_filtered={self.mr_filtered!r}",
        ]
        for k in sorted(self.hits_at_k_raw):
            lines.append(f"hit{k}_raw={self.hits_at_k_raw[k]!r}")
            lines.append(f"hit{k}_filtered={self.hits_at_k_filtered[k]!r}")
        return "\n".join(lines) + "\n"

    def write_ranks(self, path: str, vocab: Vocab) -> None:
        """Per-observation TSV: triple labels, side, raw and filtered rank."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("head\trelation\ttail\tside\traw_rank\tfiltered_rank\n")
            for triple, side, raw, filtered in self.per_triple_ranks:
                fh.write(
                    f"{vocab.entity_label(triple.head)}\t"
                    f"{vocab.relation_label(triple.relation)}\t"
                    f"{vocab.entity_label(triple.tail)}\t"
                    f"{side}\t{raw}\t{filtered}\n"
                )


def _ranks_from_distances(dists: np.ndarray, true_id: int, removed) -> tuple:
    s = dists[true_id]
    lower = int((dists < s).sum())
    ties = int((dists == s).sum()) - 1
    raw = 1 + lower + ties // 2
    if removed is None or len(removed) == 0:
        return raw, raw
    rd = dists[removed]
    lower_rem = int((rd < s).sum())
    ties_rem = int((rd == s).sum())
    # The true entity sits in the removed set whenever the query triple is
    # known; it must not count as a removed competitor.
    pos = int(np.searchsorted(removed, true_id))
    if pos < len(removed) and removed[pos] == true_id:
        ties_rem -= 1
    return raw, 1 + (lower - lower_rem) + (ties - ties_rem) // 2


def _side_distances(model: EmbeddingTable, triple, side: str) -> tuple:
    h, r, t = triple
    if side == "tail":
        query = model.entities[h] + model.relations[r]
        true_id = t
    elif side == "head":
        query = model.entities[t] - model.relations[r]
        true_id = h
    else:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    return kernels.candidate_distances(model.entities, query, model.l1), int(true_id)


def _removed_ids(dataset: SplitDataset, triple, side: str):
    h, r, t = triple
    if side == "tail":
        return dataset.known_tails().get((int(h), int(r)))
    return dataset.known_heads().get((int(r), int(t)))


def rank_of(
    model: EmbeddingTable,
    triple,
    side: str,
    known: SplitDataset,
    filtered: bool,
) -> int:
    """Rank of the true entity among all candidate replacements of one side."""
    dists, true_id = _side_distances(model, triple, side)
    removed = _removed_ids(known, triple, side) if filtered else None
    raw, filt = _ranks_from_distances(dists, true_id, removed)
    return filt if filtered else raw


def evaluate(
    model: EmbeddingTable,
    dataset: SplitDataset,
    ks=(1, 3, 10),
    split: str = "test",
) -> EvalReport:
    """Rank every triple of the split on both sides; aggregate pooled means.

    MR is the arithmetic mean over the 2 * |split| rank observations and
    Hits@k the fraction of observations with rank <= k, raw and filtered.
    """
    triples = dataset.split(split)
    if not triples:
        raise ValueError(f"cannot evaluate an empty {split!r} split")
    ks = sorted(set(int(k) for k in ks))
    raw_ranks = np.empty(2 * len(triples), dtype=np.int64)
    filt_ranks = np.empty(2 * len(triples), dtype=np.int64)
    per_triple = []
    i = 0
    for triple in triples:
        for side in SIDES:
            dists, true_id = _side_distances(model, triple, side)
            removed = _removed_ids(dataset, triple, side)
            raw, filt = _ranks_from_distances(dists, true_id, removed)
            raw_ranks[i] = raw
            filt_ranks[i] = filt
            per_triple.append((Triple(*triple), side, raw, filt))
            i += 1
    return EvalReport(
        split=split,
        observations=i,
        mr_raw=float(raw_ranks.mean()),
        mr_filtered=float(filt_ranks.mean()),
        hits_at_k_raw={k: float((raw_ranks <= k).mean()) for k in ks},
        hits_at_k_filtered={k: float((filt_ranks <= k).mean()) for k in ks},
        per_triple_ranks=per_triple,
    )
