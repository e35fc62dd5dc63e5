"""Embedding parameters, translational scoring, and the checkpoint format."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .datasets import Vocab
from .errors import DataError

NORMS = ("l1", "l2")

CHECKPOINT_VERSION = 1
MANIFEST_FILE = "manifest.txt"
ENTITY_FILE = "entities.f32"
RELATION_FILE = "relations.f32"


@dataclass
class EmbeddingTable:
    """Entity and relation vectors plus the norm they are scored under.

    Arrays are float64 in memory (training precision); checkpoints store
    float32 (see :func:`save_checkpoint`).
    """

    entities: np.ndarray
    relations: np.ndarray
    norm: str = "l2"

    def __post_init__(self):
        self.entities = np.ascontiguousarray(self.entities, dtype=np.float64)
        self.relations = np.ascontiguousarray(self.relations, dtype=np.float64)
        if self.entities.ndim != 2 or self.relations.ndim != 2:
            raise ValueError("embedding arrays must be 2-D")
        if self.entities.shape[1] != self.relations.shape[1]:
            raise ValueError(
                "entity and relation dimensions differ: "
                f"{self.entities.shape[1]} vs {self.relations.shape[1]}"
            )
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")

    @property
    def n_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relations.shape[0]

    @property
    def dim(self) -> int:
        return self.entities.shape[1]

    @property
    def l1(self) -> bool:
        return self.norm == "l1"

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.entities.copy(), self.relations.copy(), self.norm)


def init_embeddings(vocab: Vocab, dim: int, seed: int, norm: str = "l2") -> EmbeddingTable:
    """Uniform init in [-6/sqrt(d), 6/sqrt(d)], entity rows unit-normalized.

    Entities are drawn before relations so the layout is reproducible from
    the seed alone.
    """
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    entities = rng.uniform(-bound, bound, size=(vocab.n_entities, dim))
    relations = rng.uniform(-bound, bound, size=(vocab.n_relations, dim))
    table = EmbeddingTable(entities, relations, norm=norm)
    normalize_entities(table)
    return table


def score(table: EmbeddingTable, triple, norm: str | None = None) -> float:
    """||h + r - t|| for one triple; lower means more plausible."""
    h, r, t = triple
    res = table.entities[h] + table.relations[r] - table.entities[t]
    if (norm or table.norm) == "l1":
        return float(np.abs(res).sum())
    return float(np.sqrt(res @ res))


def score_batch(table: EmbeddingTable, triples: np.ndarray) -> np.ndarray:
    """Scores for an (n, 3) id array, via the active backend kernel."""
    arr = np.asarray(triples, dtype=np.int64)
    h = np.ascontiguousarray(arr[:, 0])
    r = np.ascontiguousarray(arr[:, 1])
    t = np.ascontiguousarray(arr[:, 2])
    return kernels.triple_scores(table.entities, table.relations, h, r, t, table.l1)


def score_gradients(table: EmbeddingTable, triple, norm: str | None = None):
    """Analytic partials of the score w.r.t. the three vectors.

    Returns (grad_h, grad_r, grad_t) with grad_h = grad_r = -grad_t. At
    non-differentiable points the zero subgradient is chosen: sign(0) = 0
    componentwise for L1, the zero vector for an L2 residual of norm 0.
    """
    h, r, t = triple
    res = table.entities[h] + table.relations[r] - table.entities[t]
    if (norm or table.norm) == "l1":
        u = np.sign(res)
    else:
        f = float(np.sqrt(res @ res))
        u = res / f if f > 0.0 else np.zeros_like(res)
    return u, u.copy(), -u


def normalize_entities(table: EmbeddingTable) -> int:
    """Scale every entity row to unit Euclidean norm, in place.

    Zero rows are left unchanged; returns how many there were.
    """
    norms = np.sqrt(np.einsum("ij,ij->i", table.entities, table.entities))
    zero = norms == 0.0
    norms[zero] = 1.0
    table.entities /= norms[:, None]
    return int(zero.sum())


def save_checkpoint(table: EmbeddingTable, path: str, seed: int | None = None) -> None:
    """Write a checkpoint directory: manifest plus two float32 arrays.

    Arrays are little-endian IEEE-754 float32, row-major, in vocabulary id
    order, entities then relations in separate files.
    """
    os.makedirs(path, exist_ok=True)
    lines = [
        f"version={CHECKPOINT_VERSION}",
        f"dim={table.dim}",
        f"norm={table.norm}",
        f"entity_count={table.n_entities}",
        f"relation_count={table.n_relations}",
    ]
    if seed is not None:
        lines.append(f"seed={seed}")
    with open(os.path.join(path, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    table.entities.astype("<f4").tofile(os.path.join(path, ENTITY_FILE))
    table.relations.astype("<f4").tofile(os.path.join(path, RELATION_FILE))


def read_manifest(path: str) -> dict:
    manifest_path = os.path.join(path, MANIFEST_FILE)
    if not os.path.isfile(manifest_path):
        raise DataError(f"not a checkpoint directory (no {MANIFEST_FILE}): {path}")
    out = {}
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{manifest_path}: malformed manifest line", lineno=lineno)
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _read_f32(path: str, rows: int, dim: int) -> np.ndarray:
    if not os.path.isfile(path):
        raise DataError(f"checkpoint array file missing: {path}")
    expected = rows * dim * 4
    actual = os.path.getsize(path)
    if actual != expected:
        raise DataError(
            f"{path}: expected {expected} bytes for {rows} rows of dim {dim}, found {actual}"
        )
    data = np.fromfile(path, dtype="<f4")
    return data.reshape(rows, dim).astype(np.float64)


def load_checkpoint(path: str, vocab: Vocab | None = None) -> EmbeddingTable:
    """Load a checkpoint directory written by :func:`save_checkpoint`.

    If ``vocab`` is given, entity and relation counts must match it; the
    error states both sizes.
    """
    manifest = read_manifest(path)
    try:
        version = int(manifest["version"])
        dim = int(manifest["dim"])
        n_ent = int(manifest["entity_count"])
        n_rel = int(manifest["relation_count"])
    except KeyError as exc:
        raise DataError(f"checkpoint manifest missing key {exc.args[0]!r}: {path}") from None
    except ValueError:
        raise DataError(f"checkpoint manifest has a non-integer field: {path}") from None
    if version != CHECKPOINT_VERSION:
        raise DataError(
            f"unsupported checkpoint version {version} (this build reads {CHECKPOINT_VERSION})"
        )
    norm = manifest.get("norm", "l2")
    if norm not in NORMS:
        raise DataError(f"checkpoint manifest has unknown norm {norm!r}")
    if vocab is not None:
        if vocab.n_entities != n_ent:
            raise DataError(
                f"checkpoint has {n_ent} entities but the vocabulary has {vocab.n_entities}"
            )
        if vocab.n_relations != n_rel:
            raise DataError(
                f"checkpoint has {n_rel} relations but the vocabulary has {vocab.n_relations}"
            )
    entities = _read_f32(os.path.join(path, ENTITY_FILE), n_ent, dim)
    relations = _read_f32(os.path.join(path, RELATION_FILE), n_rel, dim)
    return EmbeddingTable(entities, relations, norm=norm)
