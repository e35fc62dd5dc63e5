"""Training objectives: margin ranking, bounded-positive (RS), and soft margin.

Loss values are functions of the two scores f_pos and f_neg (and, for the
soft-margin objective, one slack variable per positive triple). Gradients
use the zero subgradient exactly at hinge boundaries, matching the update
kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("mrl", "rs", "soft_margin")
_KIND_CODES = {"mrl": 0, "rs": 1, "soft_margin": 2}


@dataclass(frozen=True)
class LossConfig:
    kind: str = "soft_margin"
    gamma: float = 1.0
    gamma1: float = 0.5
    gamma2: float = 1.5
    lambda0: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    rs_lambda: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"loss kind must be one of {KINDS}, got {self.kind!r}")
        if self.gamma < 0 or self.gamma1 < 0:
            raise ValueError("margins gamma and gamma1 must be non-negative")
        # lambda0 = 0 is admitted (it appears in the search grid); the
        # closed-form slack optimum additionally needs lambda0 > 0.
        if min(self.lambda0, self.lambda1, self.lambda2, self.rs_lambda) < 0:
            raise ValueError("loss weights must be non-negative")
        # gamma2 only participates in the soft-margin objective; rs keeps
        # its default untouched while gamma1 sweeps past it.
        if self.kind == "soft_margin" and self.gamma2 < self.gamma1:
            raise ValueError(
                f"gamma2 must be >= gamma1, got gamma2={self.gamma2} < gamma1={self.gamma1}"
            )

    @property
    def kind_code(self) -> int:
        # Integer the update kernels dispatch on.
        return _KIND_CODES[self.kind]


def mrl_loss(f_pos: float, f_neg: float, gamma: float) -> float:
    """Margin ranking loss [f_pos + gamma - f_neg]+."""
    return max(0.0, f_pos + gamma - f_neg)


def rs_loss(f_pos: float, f_neg: float, gamma: float, gamma1: float, rs_lambda: float) -> float:
    """Margin ranking plus a penalty when the positive score exceeds gamma1."""
    return max(0.0, f_pos + gamma - f_neg) + rs_lambda * max(0.0, f_pos - gamma1)


def soft_margin_loss(f_pos: float, f_neg: float, xi: float, cfg: LossConfig) -> float:
    """lambda0 xi^2 + lambda1 [f_pos - gamma1]+ + lambda2 [gamma2 - f_neg - xi]+.

    The slack xi lets the negative-score bound gamma2 slide at a quadratic
    price; callers keep xi >= 0 by projection.
    """
    return (
        cfg.lambda0 * xi * xi
        + cfg.lambda1 * max(0.0, f_pos - cfg.gamma1)
        + cfg.lambda2 * max(0.0, cfg.gamma2 - f_neg - xi)
    )


def pair_loss(cfg: LossConfig, f_pos: float, f_neg: float, xi: float = 0.0) -> float:
    if cfg.kind == "mrl":
        return mrl_loss(f_pos, f_neg, cfg.gamma)
    if cfg.kind == "rs":
        return rs_loss(f_pos, f_neg, cfg.gamma, cfg.gamma1, cfg.rs_lambda)
    return soft_margin_loss(f_pos, f_neg, xi, cfg)


def loss_gradients(cfg: LossConfig, f_pos: float, f_neg: float, xi: float = 0.0):
    """Partials (d/df_pos, d/df_neg, d/dxi) of the configured loss.

    Piecewise constant; strict inequalities select the zero subgradient at
    every hinge boundary.
    """
    if cfg.kind == "mrl":
        active = f_pos + cfg.gamma - f_neg > 0.0
        g = 1.0 if active else 0.0
        return g, -g, 0.0
    if cfg.kind == "rs":
        rank_active = f_pos + cfg.gamma - f_neg > 0.0
        bound_active = f_pos - cfg.gamma1 > 0.0
        g_pos = (1.0 if rank_active else 0.0) + (cfg.rs_lambda if bound_active else 0.0)
        g_neg = -1.0 if rank_active else 0.0
        return g_pos, g_neg, 0.0
    over = f_pos - cfg.gamma1 > 0.0
    slide = cfg.gamma2 - f_neg - xi > 0.0
    g_pos = cfg.lambda1 if over else 0.0
    g_neg = -cfg.lambda2 if slide else 0.0
    g_xi = 2.0 * cfg.lambda0 * xi - (cfg.lambda2 if slide else 0.0)
    return g_pos, g_neg, g_xi


def optimal_slack(f_neg: float, cfg: LossConfig) -> float:
    """Argmin over xi >= 0 of lambda0 xi^2 + lambda2 [gamma2 - f_neg - xi]+.

    Closed form: min(lambda2 / (2 lambda0), [gamma2 - f_neg]+). Requires
    lambda0 > 0 (the quadratic term is what pins the optimum down).
    """
    if cfg.lambda0 <= 0.0:
        raise ValueError(f"optimal_slack needs lambda0 > 0, got {cfg.lambda0}")
    return min(cfg.lambda2 / (2.0 * cfg.lambda0), max(0.0, cfg.gamma2 - f_neg))


@dataclass
class SlackStore:
    """One slack value per positive train triple, with its AdaGrad state.

    Values persist across epochs and are indexed by position in the train
    split. Not checkpointed; they are training-time auxiliaries.
    """

    values: np.ndarray
    acc: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.acc is None:
            self.acc = np.zeros_like(self.values)

    @classmethod
    def zeros(cls, n: int) -> "SlackStore":
        return cls(np.zeros(n), np.zeros(n))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def min_value(self) -> float:
        return float(self.values.min()) if len(self) else 0.0
