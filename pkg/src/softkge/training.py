"""Mini-batch training with AdaGrad, early stopping, and grid search.

The epoch loop is fully sequential (single writer): pairs are applied in
order, so a fixed seed gives bit-identical parameters and logs. Validation
runs every ``eval_every`` epochs on the filtered Hit@10, with filtered MR
as tiebreak, and the best model snapshot is what training returns unless
early stopping is disabled (patience 0 returns the final model).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import kernels
from .datasets import SplitDataset, Vocab
from .errors import NumericalError
from .evaluation import evaluate
from .losses import LossConfig, SlackStore
from .model import EmbeddingTable, init_embeddings, normalize_entities
from .sampling import NegativeSampler

OPTIMIZERS = ("adagrad", "sgd")


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 50
    loss: LossConfig = field(default_factory=LossConfig)
    norm: str = "l2"
    learning_rate: float = 0.1
    batch_size: int = 512
    max_epochs: int = 1000
    patience: int = 10
    eval_every: int = 10
    normalize_entities: bool = True
    seed: int = 0
    optimizer: str = "adagrad"
    epsilon: float = 1e-8
    xi_learning_rate: float | None = None
    negatives_per_positive: int = 1
    filter_known: bool = True
    false_negative_rate: float = 0.0

    def __post_init__(self):
        if min(self.dim, self.batch_size, self.max_epochs, self.eval_every) <= 0:
            raise ValueError("dim, batch_size, max_epochs, eval_every must be positive")
        if self.patience < 0:
            raise ValueError("patience must be >= 0 (0 disables early stopping)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.xi_learning_rate is not None and self.xi_learning_rate <= 0:
            raise ValueError("xi_learning_rate must be positive when given")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.norm not in ("l1", "l2"):
            raise ValueError(f"norm must be l1 or l2, got {self.norm!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")

    @property
    def effective_xi_learning_rate(self) -> float:
        return self.learning_rate if self.xi_learning_rate is None else self.xi_learning_rate


@dataclass
class AdaGradState:
    """Squared-gradient accumulators for the embedding tables.

    Slack accumulators live in the SlackStore next to their values.
    """

    entities: np.ndarray
    relations: np.ndarray
    epsilon: float = 1e-8

    @classmethod
    def for_table(cls, table: EmbeddingTable, epsilon: float = 1e-8) -> "AdaGradState":
        return cls(np.zeros_like(table.entities), np.zeros_like(table.relations), epsilon)


def adagrad_update(params, grads, acc, lr: float, epsilon: float = 1e-8, rows=None):
    """acc += g^2; param -= lr * g / (sqrt(acc) + eps), optionally row-sparse.

    ``rows`` must not contain duplicates (fancy-index updates would drop
    repeats); the batch kernels merge duplicate rows before calling into
    an update.
    """
    if rows is None:
        acc += grads * grads
        params -= lr * grads / (np.sqrt(acc) + epsilon)
    else:
        acc[rows] += grads * grads
        params[rows] -= lr * grads / (np.sqrt(acc[rows]) + epsilon)


@dataclass
class EpochSummary:
    epoch: int
    mean_loss: float
    pos_hinge: int
    neg_hinge: int
    min_slack: float
    zero_rows: int


class TrainLog:
    """Per-epoch TSV log with bit-stable float formatting (repr round-trip)."""

    HEADER = "epoch\tmean_loss\tval_mr_filtered\tval_hit10_filtered"

    def __init__(self):
        self.rows: list = []

    def add(self, epoch: int, mean_loss: float, val_mr=None, val_hit10=None):
        mr = "" if val_mr is None else repr(float(val_mr))
        hit = "" if val_hit10 is None else repr(float(val_hit10))
        self.rows.append(f"{epoch}\t{float(mean_loss)!r}\t{mr}\t{hit}")

    def to_text(self) -> str:
        return "\n".join([self.HEADER] + self.rows) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def _batch_columns(train_arr: np.ndarray, positions: np.ndarray, npp: int):
    if npp > 1:
        positions = np.repeat(positions, npp)
    pos_h = np.ascontiguousarray(train_arr[positions, 0])
    pos_r = np.ascontiguousarray(train_arr[positions, 1])
    pos_t = np.ascontiguousarray(train_arr[positions, 2])
    return positions, pos_h, pos_r, pos_t


def train_epoch(
    model: EmbeddingTable,
    slack: SlackStore,
    dataset: SplitDataset,
    sampler: NegativeSampler,
    cfg: TrainConfig,
    state: AdaGradState,
    rng: np.random.Generator,
    epoch: int = 0,
) -> EpochSummary:
    """One shuffled pass over the train split; mutates model/slack/state."""
    train_arr = dataset.split_array("train")
    n = train_arr.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty train split")
    order = rng.permutation(n)
    loss_cfg = cfg.loss
    total_loss = 0.0
    total_pairs = 0
    pos_hinge = 0
    neg_hinge = 0
    for start in range(0, n, cfg.batch_size):
        positions = order[start : start + cfg.batch_size]
        slack_idx, pos_h, pos_r, pos_t = _batch_columns(
            train_arr, positions, cfg.negatives_per_positive
        )
        neg_h, neg_t = sampler.sample_batch_arrays(pos_h, pos_r, pos_t)
        loss_sum, over, under, bad, bad_fpos, bad_fneg = kernels.pair_update_batch(
            model.entities,
            model.relations,
            state.entities,
            state.relations,
            slack.values,
            slack.acc,
            pos_h,
            pos_r,
            pos_t,
            np.ascontiguousarray(neg_h),
            np.ascontiguousarray(neg_t),
            np.ascontiguousarray(slack_idx),
            loss_cfg.kind_code,
            model.l1,
            float(loss_cfg.gamma),
            float(loss_cfg.gamma1),
            float(loss_cfg.gamma2),
            float(loss_cfg.lambda0),
            float(loss_cfg.lambda1),
            float(loss_cfg.lambda2),
            float(loss_cfg.rs_lambda),
            float(cfg.learning_rate),
            float(cfg.effective_xi_learning_rate),
            float(cfg.epsilon),
            cfg.optimizer == "adagrad",
        )
        if bad >= 0:
            raise NumericalError(
                f"non-finite loss in epoch {epoch} at train triple "
                f"{int(slack_idx[bad])}: f_pos={bad_fpos!r}, f_neg={bad_fneg!r}"
            )
        total_loss += loss_sum
        total_pairs += pos_h.shape[0]
        pos_hinge += int(over)
        neg_hinge += int(under)
    zero_rows = normalize_entities(model) if cfg.normalize_entities else 0
    min_slack = slack.min_value if loss_cfg.kind == "soft_margin" else 0.0
    return EpochSummary(
        epoch=epoch,
        mean_loss=total_loss / total_pairs,
        pos_hinge=pos_hinge,
        neg_hinge=neg_hinge,
        min_slack=min_slack,
        zero_rows=zero_rows,
    )


@dataclass
class TrainResult:
    model: EmbeddingTable
    log: TrainLog
    epochs_run: int
    best_epoch: int | None
    best_hit10: float | None
    best_mr: float | None
    slack: SlackStore
    sampler: NegativeSampler
    stopped_early: bool


def train(model: EmbeddingTable, dataset: SplitDataset, cfg: TrainConfig) -> TrainResult:
    """Train up to max_epochs with validation-driven model selection.

    Every ``eval_every`` epochs the filtered Hit@10 (tiebreak: lower
    filtered MR) is measured on the validation split and the best snapshot
    kept. After ``patience`` evaluations without improvement training
    stops; patience 0 disables stopping and the final model is returned.
    """
    rng = np.random.default_rng(cfg.seed)
    train_arr = dataset.split_array("train")
    sampler = NegativeSampler(
        train_arr,
        model.n_entities,
        model.n_relations,
        rng,
        filter_known=cfg.filter_known,
        negatives_per_positive=cfg.negatives_per_positive,
        false_negative_rate=cfg.false_negative_rate,
    )
    state = AdaGradState.for_table(model, cfg.epsilon)
    slack = SlackStore.zeros(train_arr.shape[0])
    log = TrainLog()
    has_valid = len(dataset.valid) > 0

    best_model = None
    best_key = None
    best_epoch = None
    evals_without_improvement = 0
    stopped_early = False
    epochs_run = 0
    for epoch in range(1, cfg.max_epochs + 1):
        summary = train_epoch(model, slack, dataset, sampler, cfg, state, rng, epoch)
        epochs_run = epoch
        if has_valid and epoch % cfg.eval_every == 0:
            report = evaluate(model, dataset, ks=(10,), split="valid")
            hit10 = report.hits_at_k_filtered[10]
            mr = report.mr_filtered
            log.add(epoch, summary.mean_loss, mr, hit10)
            key = (hit10, -mr)
            if best_key is None or key > best_key:
                best_key = key
                best_model = model.copy()
                best_epoch = epoch
                evals_without_improvement = 0
            else:
                evals_without_improvement += 1
                if cfg.patience > 0 and evals_without_improvement >= cfg.patience:
                    stopped_early = True
                    break
        else:
            log.add(epoch, summary.mean_loss)
    if cfg.patience == 0 or best_model is None:
        final_model = model
    else:
        final_model = best_model
    return TrainResult(
        model=final_model,
        log=log,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        best_hit10=None if best_key is None else best_key[0],
        best_mr=None if best_key is None else -best_key[1],
        slack=slack,
        sampler=sampler,
        stopped_early=stopped_early,
    )


def fit_slack(
    model: EmbeddingTable,
    pos: np.ndarray,
    neg_h: np.ndarray,
    neg_t: np.ndarray,
    loss_cfg: LossConfig,
    steps: int = 500,
    xi_learning_rate: float = 1.0,
    anneal: float = 0.85,
    optimizer: str = "adagrad",
) -> SlackStore:
    """Train only the slack variables against frozen scores.

    Runs the regular pair-update kernel with the embedding learning rate
    forced to 0, so each xi descends its own 1-D subproblem; with the
    closed-form optimum as the target this is the oracle check for the
    slack dynamics.

    The step size decays as xi_learning_rate / (1 + t) ** anneal.  The
    per-pair objective has a subgradient kink where the slide hinge
    activates, and a constant step leaves xi hovering around the kink at
    step-size amplitude; annealing shrinks the hover while the early
    steps stay large enough to cover the travel to the optimum.
    """
    if loss_cfg.kind != "soft_margin":
        raise ValueError("fit_slack only applies to the soft-margin objective")
    pos = np.asarray(pos, dtype=np.int64).reshape(-1, 3)
    n = pos.shape[0]
    slack = SlackStore.zeros(n)
    state = AdaGradState.for_table(model)
    cols = [np.ascontiguousarray(pos[:, j]) for j in range(3)]
    neg_h = np.ascontiguousarray(neg_h, dtype=np.int64)
    neg_t = np.ascontiguousarray(neg_t, dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    for step in range(steps):
        step_lr = xi_learning_rate / (1.0 + step) ** anneal
        _, _, _, bad, bad_fpos, bad_fneg = kernels.pair_update_batch(
            model.entities,
            model.relations,
            state.entities,
            state.relations,
            slack.values,
            slack.acc,
            cols[0],
            cols[1],
            cols[2],
            neg_h,
            neg_t,
            idx,
            loss_cfg.kind_code,
            model.l1,
            float(loss_cfg.gamma),
            float(loss_cfg.gamma1),
            float(loss_cfg.gamma2),
            float(loss_cfg.lambda0),
            float(loss_cfg.lambda1),
            float(loss_cfg.lambda2),
            float(loss_cfg.rs_lambda),
            0.0,
            float(step_lr),
            1e-8,
            optimizer == "adagrad",
        )
        if bad >= 0:
            raise NumericalError(
                f"non-finite loss while fitting slack at pair {bad}: "
                f"f_pos={bad_fpos!r}, f_neg={bad_fneg!r}"
            )
    return slack


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grids; defaults follow the standard search sets."""

    dims: tuple = (50, 100, 200)
    gammas: tuple = tuple(round(0.1 * i, 1) for i in range(1, 21))
    gamma1s: tuple = tuple(round(0.1 * i, 1) for i in range(1, 21))
    gamma2s: tuple = tuple(round(0.1 * i, 1) for i in range(2, 22))
    lambda0s: tuple = (0.01, 0.1, 0, 1, 10, 100)


def default_grids() -> GridSpec:
    return GridSpec()


def expand_grid(base: TrainConfig, grids: GridSpec | None = None) -> list:
    """Enumerate admissible configs for the base config's loss kind.

    Soft-margin combos with gamma2 < gamma1 are filtered out rather than
    rejected, since the declared gamma grids overlap.
    """
    grids = grids or default_grids()
    configs = []
    kind = base.loss.kind
    if kind == "mrl":
        for dim, gamma in itertools.product(grids.dims, grids.gammas):
            configs.append(replace(base, dim=dim, loss=replace(base.loss, gamma=gamma)))
    elif kind == "rs":
        for dim, gamma, gamma1 in itertools.product(grids.dims, grids.gammas, grids.gamma1s):
            loss = replace(base.loss, gamma=gamma, gamma1=gamma1)
            configs.append(replace(base, dim=dim, loss=loss))
    else:
        for dim, gamma1, gamma2, lambda0 in itertools.product(
            grids.dims, grids.gamma1s, grids.gamma2s, grids.lambda0s
        ):
            if gamma2 < gamma1:
                continue
            loss = replace(base.loss, gamma1=gamma1, gamma2=gamma2, lambda0=lambda0)
            configs.append(replace(base, dim=dim, loss=loss))
    return configs


@dataclass
class GridResult:
    config: TrainConfig
    hit10: float
    mr: float
    best_epoch: int | None
    epochs_run: int


GRID_HEADER = (
    "rank\tkind\tdim\tnorm\tlearning_rate\tgamma\tgamma1\tgamma2\t"
    "lambda0\tlambda1\tlambda2\trs_lambda\tbest_epoch\tepochs_run\t"
    "val_hit10_filtered\tval_mr_filtered"
)


def grid_report_rows(results: list) -> list:
    rows = []
    for rank, res in enumerate(results, start=1):
        cfg = res.config
        loss = cfg.loss
        rows.append(
            f"{rank}\t{loss.kind}\t{cfg.dim}\t{cfg.norm}\t{cfg.learning_rate!r}\t"
            f"{loss.gamma!r}\t{loss.gamma1!r}\t{loss.gamma2!r}\t{loss.lambda0!r}\t"
            f"{loss.lambda1!r}\t{loss.lambda2!r}\t{loss.rs_lambda!r}\t"
            f"{res.best_epoch}\t{res.epochs_run}\t{res.hit10!r}\t{res.mr!r}"
        )
    return rows


def grid_search(
    vocab: Vocab,
    dataset: SplitDataset,
    base_cfg: TrainConfig,
    grids: GridSpec | None = None,
) -> list:
    """Train every admissible combo; rank by validation filtered Hit@10.

    Ties break toward lower filtered MR. Each combo starts from a fresh
    seeded init, so the whole search is reproducible from the base seed.
    """
    if len(dataset.valid) == 0:
        raise ValueError("grid search needs a non-empty validation split")
    configs = expand_grid(base_cfg, grids)
    if not configs:
        raise ValueError("hyperparameter grid is empty after admissibility filtering")
    results = []
    for cfg in configs:
        model = init_embeddings(vocab, cfg.dim, cfg.seed, cfg.norm)
        out = train(model, dataset, cfg)
        if out.best_hit10 is None:
            continue
        results.append(
            GridResult(
                config=cfg,
                hit10=out.best_hit10,
                mr=out.best_mr,
                best_epoch=out.best_epoch,
                epochs_run=out.epochs_run,
            )
        )
    results.sort(key=lambda res: (-res.hit10, res.mr))
    return results
