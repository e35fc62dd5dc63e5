"""Pure-numpy kernels: the reference semantics for the numba twins.

The pairwise update walks the batch sequentially (single-writer contract:
a pair sees every update made by the pairs before it), so the fallback
keeps a Python loop there; scoring kernels are vectorized.

Loss kinds are encoded as integers: 0 = margin ranking, 1 = margin ranking
with a bounded-positive penalty, 2 = soft margin with slack. Hinge
derivatives use the zero subgradient exactly at hinge boundaries (strict
inequalities below).
"""

from __future__ import annotations

import numpy as np


def candidate_distances(ent: np.ndarray, query: np.ndarray, l1: bool) -> np.ndarray:
    """Distance from ``query`` to every entity row, under L1 or L2."""
    diff = ent - query
    if l1:
        return np.abs(diff).sum(axis=1)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def triple_scores(
    ent: np.ndarray,
    rel: np.ndarray,
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
    l1: bool,
) -> np.ndarray:
    """Translational scores ||h + r - t|| for a batch of id triples."""
    res = ent[h] + rel[r] - ent[t]
    if l1:
        return np.abs(res).sum(axis=1)
    return np.sqrt(np.einsum("ij,ij->i", res, res))


def _norm_and_unit(res: np.ndarray, l1: bool) -> tuple[float, np.ndarray]:
    # Gradient of the norm w.r.t. the residual; zero subgradient at kinks.
    if l1:
        return float(np.abs(res).sum()), np.sign(res)
    f = float(np.sqrt(res @ res))
    if f > 0.0:
        return f, res / f
    # f is 0 at an exact coincidence but may also be NaN; pass it through
    # so the non-finite guard can see it, with a zero subgradient either way.
    return f, np.zeros_like(res)


def pair_update_batch(
    ent: np.ndarray,
    rel: np.ndarray,
    ent_acc: np.ndarray,
    rel_acc: np.ndarray,
    xi: np.ndarray,
    xi_acc: np.ndarray,
    pos_h: np.ndarray,
    pos_r: np.ndarray,
    pos_t: np.ndarray,
    neg_h: np.ndarray,
    neg_t: np.ndarray,
    slack_idx: np.ndarray,
    loss_kind: int,
    l1: bool,
    gamma: float,
    gamma1: float,
    gamma2: float,
    lam0: float,
    lam1: float,
    lam2: float,
    rs_lambda: float,
    lr: float,
    xi_lr: float,
    eps: float,
    use_adagrad: bool,
):
    """Sequential SGD/AdaGrad pass over one batch of (positive, negative) pairs.

    Mutates ``ent``/``rel`` (and ``xi`` for the soft-margin loss) plus their
    accumulators in place. Returns
    ``(loss_sum, pos_hinge, neg_hinge, bad_index, bad_fpos, bad_fneg)``;
    ``bad_index`` is -1 unless a non-finite pair loss stopped the pass early.
    """
    n = pos_h.shape[0]
    d = ent.shape[1]
    loss_sum = 0.0
    pos_hinge = 0
    neg_hinge = 0

    for i in range(n):
        h = pos_h[i]
        r = pos_r[i]
        t = pos_t[i]
        h2 = neg_h[i]
        t2 = neg_t[i]

        res_p = ent[h] + rel[r] - ent[t]
        res_n = ent[h2] + rel[r] - ent[t2]
        f_pos, u_p = _norm_and_unit(res_p, l1)
        f_neg, u_n = _norm_and_unit(res_n, l1)

        g_xi = 0.0
        if loss_kind == 0:
            viol = f_pos + gamma - f_neg
            loss = viol if viol > 0.0 else 0.0
            g_pos = 1.0 if viol > 0.0 else 0.0
            g_neg = -g_pos
            if viol > 0.0:
                neg_hinge += 1
        elif loss_kind == 1:
            viol = f_pos + gamma - f_neg
            over = f_pos - gamma1
            loss = (viol if viol > 0.0 else 0.0) + rs_lambda * (over if over > 0.0 else 0.0)
            g_pos = (1.0 if viol > 0.0 else 0.0) + (rs_lambda if over > 0.0 else 0.0)
            g_neg = -1.0 if viol > 0.0 else 0.0
            if viol > 0.0:
                neg_hinge += 1
            if over > 0.0:
                pos_hinge += 1
        else:
            si = slack_idx[i]
            x = xi[si]
            over = f_pos - gamma1
            slide = gamma2 - f_neg - x
            loss = lam0 * x * x
            loss += lam1 * (over if over > 0.0 else 0.0)
            loss += lam2 * (slide if slide > 0.0 else 0.0)
            g_pos = lam1 if over > 0.0 else 0.0
            g_neg = -lam2 if slide > 0.0 else 0.0
            g_xi = 2.0 * lam0 * x - (lam2 if slide > 0.0 else 0.0)
            if over > 0.0:
                pos_hinge += 1
            if slide > 0.0:
                neg_hinge += 1

        # Check the scores too: a NaN score closes every hinge comparison,
        # leaving the loss itself deceptively finite.
        if not (np.isfinite(loss) and np.isfinite(f_pos) and np.isfinite(f_neg)):
            return loss_sum, pos_hinge, neg_hinge, i, f_pos, f_neg
        loss_sum += loss

        # Entity gradients, merging duplicate rows (e.g. the shared head of a
        # tail-corrupted pair) so every touched row gets exactly one update.
        ids = (h, t, h2, t2)
        grads = (g_pos * u_p, -g_pos * u_p, g_neg * u_n, -g_neg * u_n)
        uniq_ids = np.empty(4, dtype=np.int64)
        uniq_grads = np.zeros((4, d))
        m = 0
        for s in range(4):
            found = -1
            for j in range(m):
                if uniq_ids[j] == ids[s]:
                    found = j
                    break
            if found >= 0:
                uniq_grads[found] += grads[s]
            else:
                uniq_ids[m] = ids[s]
                uniq_grads[m] = grads[s]
                m += 1

        for j in range(m):
            row = uniq_ids[j]
            g = uniq_grads[j]
            if use_adagrad:
                ent_acc[row] += g * g
                ent[row] -= lr * g / (np.sqrt(ent_acc[row]) + eps)
            else:
                ent[row] -= lr * g

        g_rel = g_pos * u_p + g_neg * u_n
        if use_adagrad:
            rel_acc[r] += g_rel * g_rel
            rel[r] -= lr * g_rel / (np.sqrt(rel_acc[r]) + eps)
        else:
            rel[r] -= lr * g_rel

        if loss_kind == 2:
            si = slack_idx[i]
            if use_adagrad:
                xi_acc[si] += g_xi * g_xi
                step = xi_lr * g_xi / (np.sqrt(xi_acc[si]) + eps)
            else:
                step = xi_lr * g_xi
            x_new = xi[si] - step
            xi[si] = x_new if x_new > 0.0 else 0.0

    return loss_sum, pos_hinge, neg_hinge, -1, 0.0, 0.0
