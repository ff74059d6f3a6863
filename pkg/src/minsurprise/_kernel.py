"""Compiled swarm simulation loops.

Predictions never influence the world, so a run is split in two passes:

1. ``run_world`` moves the swarm with the actor alone and stores every
   sensor reading and move/turn bit;
2. ``score_predictions`` replays the predictor over the stored readings,
   batched across agents, and accumulates the prediction-accuracy score.

``fitness.simulate(engine="python")`` runs the same protocol through the
public ``world`` / ``controllers`` functions; the tests check both agree.

Speed notes: sensor cells come from a precomputed (cell, heading) table; the
actor is a pure function of its 15 input bits, so its decision is cached per
input pattern for the duration of a run; the predictor works on
(neuron, agent) arrays so each step is one small matrix product;
``exp`` is a branch-free Cody-Waite/Taylor evaluation that LLVM can
vectorize (libm calls cannot be).
"""

import math

import numpy as np
from numba import njit

_LOG2E = 1.4426950408889634
_LN2_HI = 0.693145751953125
_LN2_LO = 1.42860682030941723212e-6
# 1/n! for n = 11..0; truncation error below 1e-14 relative on |r| <= ln2 / 2
_EXP_COEFFS = (1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0,
               1.0 / 5040.0, 1.0 / 720.0, 1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0, 1.0)


@njit(cache=True)
def neighbor_table(L, offsets, heading_vectors):
    """``table[c, h, k]`` = flat index of sensor cell k for an agent on cell c facing h;
    ``table[c, h, R]`` = the cell straight ahead."""
    R = offsets.shape[1]
    table = np.empty((L * L, 4, R + 1), dtype=np.int64)
    for y in range(L):
        for x in range(L):
            c = y * L + x
            for h in range(4):
                for k in range(R):
                    cx = (x + offsets[h, k, 0] + 2 * L) % L
                    cy = (y + offsets[h, k, 1] + 2 * L) % L
                    table[c, h, k] = cy * L + cx
                fx = (x + heading_vectors[h, 0] + L) % L
                fy = (y + heading_vectors[h, 1] + L) % L
                table[c, h, R] = fy * L + fx
    return table


@njit(cache=True, nogil=True)
def run_world(L, xs, ys, hs, occ, nbr, a_w1, a_b1, a_w2, a_b2,
              n_steps, flips, sens_out, a0_out, act_out, pose_out):
    """Move the swarm for ``n_steps`` steps in place.

    Fills ``sens_out[t, k, i]`` (t = 0..n_steps) with the (noisy) readings,
    ``a0_out[t, i]`` with the move bit and ``act_out[t, i]`` with
    ``a0 + 2 * a1``.  ``pose_out`` (T+1, N, 3) is filled when non-empty.
    """
    N = xs.shape[0]
    R = nbr.shape[2] - 1
    Ha = a_b1.shape[0]
    noisy = flips.shape[0] > 0
    record = pose_out.shape[0] > 0
    act_h = np.empty(Ha)
    sens = np.zeros(R)
    last_a0 = np.zeros(N, dtype=np.int64)
    decision = np.zeros(N, dtype=np.int64)
    # actor decision per 15-bit input: -1 unknown, else a0 + 2 * a1
    cache = np.full(1 << (R + 1), -1, dtype=np.int8)

    for t in range(n_steps + 1):
        for i in range(N):
            c = ys[i] * L + xs[i]
            h = hs[i]
            code = 0
            for k in range(R):
                o = occ[nbr[c, h, k]]
                s = 1 if (o != -1 and o != i) else 0
                if noisy and flips[t, i, k]:
                    s = 1 - s
                sens[k] = s
                sens_out[t, k, i] = s
                code |= s << k
            if record:
                pose_out[t, i, 0] = xs[i]
                pose_out[t, i, 1] = ys[i]
                pose_out[t, i, 2] = hs[i]
            if t == n_steps:
                continue
            key = code | (last_a0[i] << R)
            d = cache[key]
            if d < 0:
                for j in range(Ha):
                    acc = a_b1[j]
                    for k in range(R):
                        acc += a_w1[j, k] * sens[k]
                    acc += a_w1[j, R] * last_a0[i]
                    act_h[j] = math.tanh(acc)
                z0 = a_b2[0]
                z1 = a_b2[1]
                for j in range(Ha):
                    z0 += a_w2[0, j] * act_h[j]
                    z1 += a_w2[1, j] * act_h[j]
                d = (1 if math.tanh(z0) >= 0.0 else 0) + (2 if math.tanh(z1) >= 0.0 else 0)
                cache[key] = d
            decision[i] = d
        if t == n_steps:
            break

        # sensing is synchronous; execution is sequential in index order
        for i in range(N):
            d = decision[i]
            a0_out[t, i] = d & 1
            act_out[t, i] = d
            if d & 1:
                c = ys[i] * L + xs[i]
                nc = nbr[c, hs[i], R]
                if occ[nc] == -1:
                    occ[c] = -1
                    occ[nc] = i
                    xs[i] = nc % L
                    ys[i] = nc // L
            else:
                hs[i] = (hs[i] + (3 if d == 0 else 1)) % 4
            last_a0[i] = d & 1


@njit(cache=True, nogil=True, fastmath={"contract"})
def exp_into(x, out, scratch_k):
    """Vectorizable exp of a contiguous 1-d array (relative error ~1e-16)."""
    n = x.shape[0]
    for i in range(n):
        v = min(max(x[i], -700.0), 700.0)
        k = math.floor(v * _LOG2E + 0.5)
        r = (v - k * _LN2_HI) - k * _LN2_LO
        p = _EXP_COEFFS[0]
        p = p * r + _EXP_COEFFS[1]
        p = p * r + _EXP_COEFFS[2]
        p = p * r + _EXP_COEFFS[3]
        p = p * r + _EXP_COEFFS[4]
        p = p * r + _EXP_COEFFS[5]
        p = p * r + _EXP_COEFFS[6]
        p = p * r + _EXP_COEFFS[7]
        p = p * r + _EXP_COEFFS[8]
        p = p * r + _EXP_COEFFS[9]
        p = p * r + _EXP_COEFFS[10]
        p = p * r + _EXP_COEFFS[11]
        out[i] = p
        scratch_k[i] = (np.int64(k) + 1023) << 52
    scale = scratch_k.view(np.float64)
    for i in range(n):
        out[i] *= scale[i]


@njit(cache=True, nogil=True, fastmath={"contract"})
def score_predictions(sens, a0, w_in, w_rec, b_h, w_out, b_out,
                      fixed_mask, fixed_vals, use_predictor, binarize,
                      pred_out, pred_sum):
    """Replay the Elman predictor over stored readings and return the summed score.

    ``sens`` is (T+1, R, N) float64, ``a0`` is (T, N) float64.  The prediction
    made at step t (from reading t and move bit t) is scored against reading
    t + 1.  ``pred_out`` (T, N, R) is filled when non-empty.
    """
    T = a0.shape[0]
    R = sens.shape[1]
    N = sens.shape[2]
    Hp = b_h.shape[0]
    record = pred_out.shape[0] > 0
    # one step is a single (Hp, R+1+Hp) x (R+1+Hp, N) product over [s; a0; h]
    W = np.empty((Hp, R + 1 + Hp))
    W[:, :R + 1] = w_in
    W[:, R + 1:] = w_rec
    Wo = np.ascontiguousarray(w_out)
    X = np.zeros((R + 1 + Hp, N))
    Z = np.empty((Hp, N))
    O = np.empty((R, N))
    Zf = Z.reshape(-1)
    Of = O.reshape(-1)
    EZ = np.empty(Hp * N)
    EO = np.empty(R * N)
    ek = np.empty(max(Hp, R) * N, dtype=np.int64)
    score = 0.0

    for t in range(T):
        if use_predictor:
            X[:R] = sens[t]
            X[R] = a0[t]
            np.dot(W, X, Z)
            # tanh(z) = 1 - 2 / (exp(2z) + 1)
            for j in range(Hp):
                bj = b_h[j]
                for n in range(N):
                    Z[j, n] = 2.0 * (Z[j, n] + bj)
            exp_into(Zf, EZ, ek[:Hp * N])
            for i in range(Hp * N):
                Zf[i] = 1.0 - 2.0 / (EZ[i] + 1.0)
            X[R + 1:] = Z
            np.dot(Wo, Z, O)
            for r in range(R):
                br = b_out[r]
                for n in range(N):
                    O[r, n] = -(O[r, n] + br)
            exp_into(Of, EO, ek[:R * N])
        nxt = sens[t + 1]
        for r in range(R):
            fixed = fixed_mask[r] or not use_predictor
            fv = fixed_vals[r]
            acc = 0.0
            tot = 0.0
            for n in range(N):
                if fixed:
                    p = fv
                else:
                    p = 1.0 / (1.0 + EO[r * N + n])
                    if binarize:
                        p = 1.0 if p >= 0.5 else 0.0
                acc += 1.0 - abs(p - nxt[r, n])
                tot += p
                if record:
                    pred_out[t, n, r] = p
            score += acc
            pred_sum[r] += tot
    return score
