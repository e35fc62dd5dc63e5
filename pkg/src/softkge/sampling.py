"""Negative sampling by uniform head-or-tail corruption."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .datasets import Triple
from .errors import DataError


class NegativeSampler:
    """Corrupts one slot of a positive triple with a uniform entity draw.

    Head vs tail is a fair coin. A draw equal to the original entity is
    redrawn without limit (the output never equals the input). When
    ``filter_known`` is set, draws that form a training triple are redrawn
    up to ``max_attempts`` times; after that the last draw is returned and
    ``filter_escapes`` is incremented, which signals a near-saturated
    relation. Filtering is against the train split only, so validation and
    test triples never influence training.

    ``false_negative_rate`` is a corruption knob for robustness studies:
    with that probability the sampled negative is replaced by a genuine
    training triple that shares two slots with the positive, bypassing the
    filter. ``injected`` counts how often that happened.
    """

    def __init__(
        self,
        train,
        n_entities: int,
        n_relations: int,
        rng,
        *,
        filter_known: bool = True,
        negatives_per_positive: int = 1,
        false_negative_rate: float = 0.0,
        max_attempts: int = 100,
    ):
        if n_entities < 2:
            raise DataError(f"corruption needs at least 2 entities, got {n_entities}")
        if negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")
        if not 0.0 <= false_negative_rate <= 1.0:
            raise ValueError("false_negative_rate must be in [0, 1]")
        if n_entities * n_entities * n_relations >= 2**63:
            raise DataError("entity/relation counts too large for packed triple keys")
        self.n_entities = int(n_entities)
        self.n_relations = int(n_relations)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.filter_known = bool(filter_known)
        self.negatives_per_positive = int(negatives_per_positive)
        self.false_negative_rate = float(false_negative_rate)
        self.max_attempts = int(max_attempts)
        self.filter_escapes = 0
        self.injected = 0

        train_arr = np.asarray(train, dtype=np.int64).reshape(-1, 3)
        self._known_keys = np.sort(self._keys(train_arr[:, 0], train_arr[:, 1], train_arr[:, 2]))
        self._by_hr: dict = defaultdict(list)
        self._by_rt: dict = defaultdict(list)
        if self.false_negative_rate > 0.0:
            for h, r, t in train_arr:
                self._by_hr[(int(h), int(r))].append(int(t))
                self._by_rt[(int(r), int(t))].append(int(h))

    def _keys(self, h, r, t):
        return (h * self.n_relations + r) * self.n_entities + t

    def _in_known(self, h, r, t):
        if self._known_keys.size == 0:
            return np.zeros(h.shape[0], dtype=bool)
        keys = self._keys(h, r, t)
        pos = np.searchsorted(self._known_keys, keys)
        clipped = np.minimum(pos, self._known_keys.size - 1)
        return (self._known_keys[clipped] == keys) & (pos < self._known_keys.size)

    def sample_batch_arrays(self, pos_h, pos_r, pos_t):
        """Vectorized corruption of one batch; returns (neg_h, neg_t).

        The relation column is never corrupted, so only the two entity
        columns come back.
        """
        pos_h = np.asarray(pos_h, dtype=np.int64)
        pos_r = np.asarray(pos_r, dtype=np.int64)
        pos_t = np.asarray(pos_t, dtype=np.int64)
        n = pos_h.shape[0]
        corrupt_head = self.rng.random(n) < 0.5
        orig = np.where(corrupt_head, pos_h, pos_t)

        cand = np.empty(n, dtype=np.int64)
        attempts = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        while active.size:
            draw = self.rng.integers(0, self.n_entities, size=active.size)
            identity = draw == orig[active]
            if self.filter_known:
                hh = np.where(corrupt_head[active], draw, pos_h[active])
                tt = np.where(corrupt_head[active], pos_t[active], draw)
                known = self._in_known(hh, pos_r[active], tt) & ~identity
            else:
                known = np.zeros(active.size, dtype=bool)
            attempts[active] += known
            give_up = known & (attempts[active] >= self.max_attempts)
            self.filter_escapes += int(give_up.sum())
            accept = ~identity & (~known | give_up)
            cand[active[accept]] = draw[accept]
            active = active[~accept]

        neg_h = pos_h.copy()
        neg_t = pos_t.copy()
        neg_h[corrupt_head] = cand[corrupt_head]
        neg_t[~corrupt_head] = cand[~corrupt_head]

        if self.false_negative_rate > 0.0:
            inject = self.rng.random(n) < self.false_negative_rate
            for i in np.flatnonzero(inject):
                self._inject(int(i), bool(corrupt_head[i]), pos_h, pos_r, pos_t, neg_h, neg_t)
        return neg_h, neg_t

    def _inject(self, i, head_side, pos_h, pos_r, pos_t, neg_h, neg_t):
        # Swap the sampled negative for a true train triple two slots away
        # from the positive; prefer the slot the coin already picked.
        h, r, t = int(pos_h[i]), int(pos_r[i]), int(pos_t[i])
        for side in (head_side, not head_side):
            if side:
                pool = [e for e in self._by_rt.get((r, t), ()) if e != h]
            else:
                pool = [e for e in self._by_hr.get((h, r), ()) if e != t]
            if not pool:
                continue
            choice = pool[int(self.rng.integers(len(pool)))]
            if side:
                neg_h[i], neg_t[i] = choice, t
            else:
                neg_h[i], neg_t[i] = h, choice
            self.injected += 1
            return

    def corrupt(self, triple) -> Triple:
        """Corrupt a single triple through the batch path."""
        h, r, t = triple
        neg_h, neg_t = self.sample_batch_arrays(
            np.array([h], dtype=np.int64),
            np.array([r], dtype=np.int64),
            np.array([t], dtype=np.int64),
        )
        return Triple(int(neg_h[0]), int(r), int(neg_t[0]))

    def sample_batch(self, batch):
        """Pair every positive with ``negatives_per_positive`` negatives.

        Returns a list of (positive, negative) Triple pairs, negatives for
        one positive adjacent, in deterministic order under a fixed rng.
        """
        if len(batch) == 0:
            raise ValueError("sample_batch needs a non-empty batch")
        arr = np.asarray([tuple(t) for t in batch], dtype=np.int64)
        rep = np.repeat(np.arange(arr.shape[0]), self.negatives_per_positive)
        pos_h, pos_r, pos_t = arr[rep, 0], arr[rep, 1], arr[rep, 2]
        neg_h, neg_t = self.sample_batch_arrays(pos_h, pos_r, pos_t)
        return [
            (
                Triple(int(pos_h[i]), int(pos_r[i]), int(pos_t[i])),
                Triple(int(neg_h[i]), int(pos_r[i]), int(neg_t[i])),
            )
            for i in range(pos_h.shape[0])
        ]
