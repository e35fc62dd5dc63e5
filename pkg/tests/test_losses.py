import numpy as np
import pytest

from softkge import (
    LossConfig,
    SlackStore,
    loss_gradients,
    mrl_loss,
    optimal_slack,
    pair_loss,
    rs_loss,
    soft_margin_loss,
)

from tests import oracles


def test_config_defaults_and_kind_codes():
    assert LossConfig().kind == "soft_margin"
    assert LossConfig(kind="mrl").kind_code == 0
    assert LossConfig(kind="rs").kind_code == 1
    assert LossConfig().kind_code == 2


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(kind="hinge")
    with pytest.raises(ValueError):
        LossConfig(kind="mrl", gamma=-0.5)
    with pytest.raises(ValueError):
        LossConfig(kind="soft_margin", gamma1=1.0, gamma2=0.5)
    with pytest.raises(ValueError):
        LossConfig(lambda1=-1.0)
    # lambda0 = 0 is a legal config (it appears in the search grid) even
    # though the closed-form slack needs it strictly positive
    LossConfig(lambda0=0.0)
    with pytest.raises(ValueError):
        optimal_slack(1.0, LossConfig(lambda0=0.0))


def test_mrl_loss_values():
    assert mrl_loss(1.0, 3.0, gamma=1.0) == 0.0
    assert mrl_loss(1.0, 1.5, gamma=1.0) == pytest.approx(0.5)


def test_rs_loss_adds_positive_bound():
    base = mrl_loss(1.2, 1.5, 1.0)
    assert rs_loss(1.2, 1.5, gamma=1.0, gamma1=0.5, rs_lambda=2.0) == pytest.approx(
        base + 2.0 * 0.7
    )
    # below the bound the extra term vanishes
    assert rs_loss(0.4, 3.0, gamma=1.0, gamma1=0.5, rs_lambda=2.0) == 0.0


def test_soft_margin_loss_terms():
    cfg = LossConfig(gamma1=0.5, gamma2=1.5, lambda0=2.0, lambda1=3.0, lambda2=4.0)
    # f_pos over gamma1 by 0.3, slide hinge open by 1.5 - 0.9 - 0.1 = 0.5
    val = soft_margin_loss(0.8, 0.9, 0.1, cfg)
    assert val == pytest.approx(2.0 * 0.01 + 3.0 * 0.3 + 4.0 * 0.5)
    # slack large enough to close the slide hinge
    val2 = soft_margin_loss(0.2, 0.9, 0.7, cfg)
    assert val2 == pytest.approx(2.0 * 0.49)


def test_pair_loss_dispatches_by_kind():
    assert pair_loss(LossConfig(kind="mrl", gamma=1.0), 1.0, 1.5) == pytest.approx(0.5)
    cfg = LossConfig()
    assert pair_loss(cfg, 0.2, 0.4, xi=0.3) == pytest.approx(
        soft_margin_loss(0.2, 0.4, 0.3, cfg)
    )


@pytest.mark.parametrize("kind", ["mrl", "rs", "soft_margin"])
def test_loss_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(5)
    cfg = LossConfig(kind=kind, gamma=1.0, gamma1=0.5, gamma2=1.5)
    checked = 0
    while checked < 60:
        f_pos, f_neg = rng.uniform(0.0, 3.0, size=2)
        xi = rng.uniform(0.0, 1.0)
        margin = min(
            abs(f_pos + cfg.gamma - f_neg),
            abs(f_pos - cfg.gamma1),
            abs(cfg.gamma2 - f_neg - xi),
        )
        if margin < 1e-3:
            continue
        g_pos, g_neg, g_xi = loss_gradients(cfg, f_pos, f_neg, xi)
        fd_pos = oracles.central_diff(lambda x: pair_loss(cfg, x, f_neg, xi), f_pos)
        fd_neg = oracles.central_diff(lambda x: pair_loss(cfg, f_pos, x, xi), f_neg)
        fd_xi = oracles.central_diff(lambda x: pair_loss(cfg, f_pos, f_neg, x), xi)
        assert oracles.relative_error([g_pos, g_neg, g_xi], [fd_pos, fd_neg, fd_xi]) < 1e-6
        checked += 1


def test_gradient_is_zero_exactly_on_hinge_boundary():
    cfg = LossConfig(kind="mrl", gamma=1.0)
    # f_pos + gamma - f_neg == 0: inactive by the strict comparison
    assert loss_gradients(cfg, 1.0, 2.0) == (0.0, 0.0, 0.0)
    soft = LossConfig(gamma1=0.5, gamma2=1.5, lambda0=1.0)
    g_pos, g_neg, g_xi = loss_gradients(soft, 0.5, 1.5, 0.0)
    assert g_pos == 0.0 and g_neg == 0.0
    assert g_xi == 0.0  # 2*lambda0*xi at xi=0, slide hinge closed


def test_optimal_slack_piecewise_form():
    cfg = LossConfig(gamma2=1.5, lambda0=1.0, lambda2=1.0)
    # slide hinge closed: xi* = 0
    assert optimal_slack(2.0, cfg) == 0.0
    # interior optimum lambda2 / (2 lambda0)
    assert optimal_slack(0.2, cfg) == pytest.approx(0.5)
    # boundary optimum gamma2 - f_neg
    assert optimal_slack(1.2, cfg) == pytest.approx(0.3)


def test_optimal_slack_matches_grid_search_sample():
    rng = np.random.default_rng(17)
    for _ in range(100):
        cfg = LossConfig(
            gamma1=float(rng.uniform(0.0, 1.0)),
            gamma2=float(rng.uniform(1.0, 2.5)),
            lambda0=float(rng.uniform(0.05, 5.0)),
            lambda2=float(rng.uniform(0.1, 3.0)),
        )
        f_neg = float(rng.uniform(0.0, 3.0))
        assert abs(optimal_slack(f_neg, cfg) - oracles.grid_slack(f_neg, cfg)) < 2e-4


def test_slack_store():
    store = SlackStore.zeros(4)
    assert len(store) == 4
    assert store.min_value == 0.0
    store.values[2] = 0.7
    assert store.min_value == 0.0
    store.values[:] = [0.3, 0.2, 0.7, 0.9]
    assert store.min_value == pytest.approx(0.2)
