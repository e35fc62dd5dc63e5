"""Numba-jitted kernels; loop-style twins of :mod:`softkge.kernels_numpy`.

Compiled lazily on first call (``cache=True`` persists the compilation
across processes). Semantics must stay in lockstep with the numpy module;
the backend-agreement tests hold the two together.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def candidate_distances(ent, query, l1):
    n, d = ent.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        if l1:
            for k in range(d):
                acc += abs(ent[i, k] - query[k])
            out[i] = acc
        else:
            for k in range(d):
                diff = ent[i, k] - query[k]
                acc += diff * diff
            out[i] = np.sqrt(acc)
    return out


@njit(cache=True)
def triple_scores(ent, rel, h, r, t, l1):
    n = h.shape[0]
    d = ent.shape[1]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        if l1:
            for k in range(d):
                acc += abs(ent[h[i], k] + rel[r[i], k] - ent[t[i], k])
            out[i] = acc
        else:
            for k in range(d):
                res = ent[h[i], k] + rel[r[i], k] - ent[t[i], k]
                acc += res * res
            out[i] = np.sqrt(acc)
    return out


@njit(cache=True)
def pair_update_batch(
    ent,
    rel,
    ent_acc,
    rel_acc,
    xi,
    xi_acc,
    pos_h,
    pos_r,
    pos_t,
    neg_h,
    neg_t,
    slack_idx,
    loss_kind,
    l1,
    gamma,
    gamma1,
    gamma2,
    lam0,
    lam1,
    lam2,
    rs_lambda,
    lr,
    xi_lr,
    eps,
    use_adagrad,
):
    n = pos_h.shape[0]
    d = ent.shape[1]
    loss_sum = 0.0
    pos_hinge = 0
    neg_hinge = 0

    res_p = np.empty(d)
    res_n = np.empty(d)
    u_p = np.empty(d)
    u_n = np.empty(d)
    uniq_ids = np.empty(4, dtype=np.int64)
    uniq_grads = np.empty((4, d))

    for i in range(n):
        h = pos_h[i]
        r = pos_r[i]
        t = pos_t[i]
        h2 = neg_h[i]
        t2 = neg_t[i]

        f_pos = 0.0
        f_neg = 0.0
        if l1:
            for k in range(d):
                res_p[k] = ent[h, k] + rel[r, k] - ent[t, k]
                res_n[k] = ent[h2, k] + rel[r, k] - ent[t2, k]
                f_pos += abs(res_p[k])
                f_neg += abs(res_n[k])
            for k in range(d):
                if res_p[k] > 0.0:
                    u_p[k] = 1.0
                elif res_p[k] < 0.0:
                    u_p[k] = -1.0
                else:
                    u_p[k] = 0.0
                if res_n[k] > 0.0:
                    u_n[k] = 1.0
                elif res_n[k] < 0.0:
                    u_n[k] = -1.0
                else:
                    u_n[k] = 0.0
        else:
            for k in range(d):
                res_p[k] = ent[h, k] + rel[r, k] - ent[t, k]
                res_n[k] = ent[h2, k] + rel[r, k] - ent[t2, k]
                f_pos += res_p[k] * res_p[k]
                f_neg += res_n[k] * res_n[k]
            f_pos = np.sqrt(f_pos)
            f_neg = np.sqrt(f_neg)
            for k in range(d):
                u_p[k] = res_p[k] / f_pos if f_pos > 0.0 else 0.0
                u_n[k] = res_n[k] / f_neg if f_neg > 0.0 else 0.0

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

        # Merge duplicate entity rows so each gets exactly one update.
        m = 0
        for s in range(4):
            if s == 0:
                sid = h
                scale = g_pos
                from_pos = True
            elif s == 1:
                sid = t
                scale = -g_pos
                from_pos = True
            elif s == 2:
                sid = h2
                scale = g_neg
                from_pos = False
            else:
                sid = t2
                scale = -g_neg
                from_pos = False
            found = -1
            for j in range(m):
                if uniq_ids[j] == sid:
                    found = j
                    break
            if found < 0:
                found = m
                uniq_ids[m] = sid
                for k in range(d):
                    uniq_grads[m, k] = 0.0
                m += 1
            if from_pos:
                for k in range(d):
                    uniq_grads[found, k] += scale * u_p[k]
            else:
                for k in range(d):
                    uniq_grads[found, k] += scale * u_n[k]

        for j in range(m):
            row = uniq_ids[j]
            if use_adagrad:
                for k in range(d):
                    g = uniq_grads[j, k]
                    ent_acc[row, k] += g * g
                    ent[row, k] -= lr * g / (np.sqrt(ent_acc[row, k]) + eps)
            else:
                for k in range(d):
                    ent[row, k] -= lr * uniq_grads[j, k]

        if use_adagrad:
            for k in range(d):
                g = g_pos * u_p[k] + g_neg * u_n[k]
                rel_acc[r, k] += g * g
                rel[r, k] -= lr * g / (np.sqrt(rel_acc[r, k]) + eps)
        else:
            for k in range(d):
                rel[r, k] -= lr * (g_pos * u_p[k] + g_neg * u_n[k])

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
