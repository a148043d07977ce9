"""Numba inner loops: LIS, hit-and-run placement, and resampling.

Permutations are int64 arrays of length n holding values 1..n; index k of
the array is place k+1 (the public API speaks 1-based throughout).

Every kernel consumes pregenerated randomness in a fixed order so that
runs are exactly replayable from the seed: a hit-and-run step uses 2n
doubles (n thresholds in place order, then n placements in symbol order),
a resampling call uses 2*kmax doubles (kmax thresholds, then kmax
placements, surplus entries ignored). Threshold uniforms u arrive
pre-transformed to log(1 - u) (vectorized outside the kernel); placement
uniforms arrive raw.

The placement kernels keep two invariants across calls so no per-step
clearing is needed: `tree` (a Fenwick tree over places) is all zeros on
entry and exit, and `head` (bucket heads per threshold cap) is all -1 on
entry and exit. Allocate them with `placement_scratch`.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lis_patience(values):
    """Length of the longest strictly increasing subsequence, O(n log n)."""
    n = values.shape[0]
    if n == 0:
        return 0
    tails = np.empty(n, np.int64)
    size = 0
    for idx in range(n):
        v = values[idx]
        lo, hi = 0, size
        while lo < hi:
            mid = (lo + hi) >> 1
            if tails[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = v
        if lo == size:
            size += 1
    return size


@njit(cache=True)
def lis_quadratic(values):
    """O(n^2) dynamic-programming LIS, kept as an independent oracle."""
    n = values.shape[0]
    best_overall = 0
    best = np.empty(n, np.int64)
    for i in range(n):
        b = 1
        vi = values[i]
        for j in range(i):
            if values[j] < vi and best[j] + 1 > b:
                b = best[j] + 1
        best[i] = b
        if b > best_overall:
            best_overall = b
    return best_overall


@njit(cache=True)
def lis_in_box(perm, x_lo, x_hi, y_lo, y_hi):
    """LIS of the restriction to integer places [x_lo, x_hi] and values [y_lo, y_hi]."""
    n = perm.shape[0]
    lo = x_lo if x_lo > 1 else 1
    hi = x_hi if x_hi < n else n
    if lo > hi:
        return 0
    tails = np.empty(hi - lo + 1, np.int64)
    size = 0
    for idx in range(lo - 1, hi):
        v = perm[idx]
        if v < y_lo or v > y_hi:
            continue
        l, h = 0, size
        while l < h:
            mid = (l + h) >> 1
            if tails[mid] < v:
                l = mid + 1
            else:
                h = mid
        tails[l] = v
        if l == size:
            size += 1
    return size


@njit(cache=True)
def _fenwick_add(tree, i, delta):
    n = tree.shape[0] - 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def _fenwick_select(tree, log2n, k):
    # smallest index with prefix sum >= k; tree must contain >= k ones
    pos = 0
    bit = 1 << log2n
    rem = k
    n = tree.shape[0] - 1
    while bit > 0:
        nxt = pos + bit
        if nxt <= n and tree[nxt] < rem:
            pos = nxt
            rem -= tree[nxt]
        bit >>= 1
    return pos + 1


@njit(cache=True)
def _log2_floor(n):
    b = 0
    while (1 << (b + 1)) <= n:
        b += 1
    return b


def placement_scratch(n: int):
    """Scratch triple (tree, head, nxt) satisfying the kernel entry invariants."""
    return (
        np.zeros(n + 1, np.int64),
        np.full(n + 1, -1, np.int64),
        np.empty(n, np.int64),
    )


@njit(cache=True)
def har_l1_step(perm, beta, log_thresh, u_place, out, b_out, tree, head, nxt):
    """One hit-and-run step for the L1 model.

    Thresholds b_i = i + (perm(i)-i)_+ - log(u_i)/(2 beta) with u_i uniform
    on (0, 1] (log_thresh holds log(u_i)); symbols n..1 are then placed
    greedily, each at a uniform choice among the unused places with
    b_i >= symbol.
    """
    n = perm.shape[0]
    log2n = _log2_floor(n)
    inv2b = 1.0 / (2.0 * beta)
    for idx in range(n):
        i = idx + 1
        disp = perm[idx] - i
        if disp < 0:
            disp = 0
        b = i + disp - log_thresh[idx] * inv2b
        b_out[idx] = b
        cap = n if b >= n else np.int64(b)  # floor; b >= i >= 1
        nxt[idx] = head[cap]
        head[cap] = idx
    active = 0
    for j in range(n, 0, -1):
        node = head[j]
        while node != -1:
            _fenwick_add(tree, node + 1, 1)
            active += 1
            node = nxt[node]
        head[j] = -1
        if active <= 0:
            raise RuntimeError("hit-and-run placement ran out of eligible places")
        r = np.int64(u_place[n - j] * active)
        if r >= active:
            r = active - 1
        pos = _fenwick_select(tree, log2n, r + 1)
        _fenwick_add(tree, pos, -1)
        active -= 1
        out[pos - 1] = j


@njit(cache=True)
def har_l2_step(perm, beta, log_thresh, u_place, out, b_out, tree, head, nxt):
    """One hit-and-run step for the L2 model.

    Thresholds b_i = perm(i) + log(u_i)/(2 beta i) with u_i uniform on
    (0, 1] (log_thresh holds log(u_i)); symbols 1..n are placed greedily
    among unused places with b_i <= symbol.
    """
    n = perm.shape[0]
    log2n = _log2_floor(n)
    for idx in range(n):
        i = idx + 1
        b = perm[idx] + log_thresh[idx] / (2.0 * beta * i)
        b_out[idx] = b
        if b <= 1.0:
            cap = 1
        else:
            c = np.int64(np.ceil(b))
            cap = c if c <= n else n  # b <= perm(i) <= n keeps cap in range
        nxt[idx] = head[cap]
        head[cap] = idx
    active = 0
    for j in range(1, n + 1):
        node = head[j]
        while node != -1:
            _fenwick_add(tree, node + 1, 1)
            active += 1
            node = nxt[node]
        head[j] = -1
        if active <= 0:
            raise RuntimeError("hit-and-run placement ran out of eligible places")
        r = np.int64(u_place[j - 1] * active)
        if r >= active:
            r = active - 1
        pos = _fenwick_select(tree, log2n, r + 1)
        _fenwick_add(tree, pos, -1)
        active -= 1
        out[pos - 1] = j


@njit(cache=True)
def _har_run_inner(perm, beta, is_l2, thresh_logs, u_place, out, b_out, tree, head, nxt):
    steps = thresh_logs.shape[0]
    for s in range(steps):
        if is_l2:
            har_l2_step(perm, beta, thresh_logs[s], u_place[s], out, b_out, tree, head, nxt)
        else:
            har_l1_step(perm, beta, thresh_logs[s], u_place[s], out, b_out, tree, head, nxt)
        perm[:] = out


def har_run(perm, beta, is_l2, uniforms):
    """Advance a chain by uniforms.shape[0] steps in place; uniforms is (steps, 2n)."""
    n = perm.shape[0]
    thresh_logs = np.log1p(-uniforms[:, :n])  # log(1 - u): u uniform on [0,1) -> (0,1]
    u_place = uniforms[:, n:]
    out = np.empty(n, np.int64)
    b_out = np.empty(n, np.float64)
    tree, head, nxt = placement_scratch(n)
    _har_run_inner(perm, beta, is_l2, thresh_logs, u_place, out, b_out, tree, head, nxt)


@njit(cache=True)
def _har_batch_inner(perms, beta, is_l2, thresh_logs, u_place, out, b_out, tree, head, nxt):
    nbatch = perms.shape[0]
    steps = thresh_logs.shape[1]
    for b in range(nbatch):
        for s in range(steps):
            if is_l2:
                har_l2_step(perms[b], beta, thresh_logs[b, s], u_place[b, s], out, b_out, tree, head, nxt)
            else:
                har_l1_step(perms[b], beta, thresh_logs[b, s], u_place[b, s], out, b_out, tree, head, nxt)
            perms[b, :] = out


def har_batch(perms, beta, is_l2, uniforms):
    """Advance a (B, n) batch of chains by k steps each; uniforms is (B, k, 2n)."""
    n = perms.shape[1]
    thresh_logs = np.log1p(-uniforms[:, :, :n])
    u_place = uniforms[:, :, n:]
    out = np.empty(n, np.int64)
    b_out = np.empty(n, np.float64)
    tree, head, nxt = placement_scratch(n)
    _har_batch_inner(perms, beta, is_l2, thresh_logs, u_place, out, b_out, tree, head, nxt)


@njit(cache=True)
def resample_l2_batch(perms, outs, beta, in_sx, in_sy, t0, kmax, uniforms):
    """Apply the L2 resampling kernel to each row of perms.

    in_sx/in_sy are boolean membership tables indexed 1..n. Each row of
    uniforms supplies kmax raw threshold doubles followed by kmax
    placement doubles; rows with k < kmax ignore the surplus.
    """
    nbatch, n = perms.shape
    i_idx = np.empty(n, np.int64)
    jvals = np.empty(n, np.int64)
    bvals = np.empty(n, np.float64)
    used = np.empty(n, np.bool_)
    for b in range(nbatch):
        for idx in range(n):
            outs[b, idx] = perms[b, idx]
        k = 0
        for idx in range(n):
            if in_sx[idx + 1] and in_sy[perms[b, idx]]:
                i_idx[k] = idx + 1
                k += 1
        if k == 0:
            continue
        for t in range(k):
            jvals[t] = perms[b, i_idx[t] - 1]
        jvals[:k].sort()
        for t in range(k):
            it = i_idx[t]
            sig = perms[b, it - 1]
            bvals[t] = sig + np.log(1.0 - uniforms[b, t]) / (2.0 * beta * (it - t0))
            used[t] = False
        for t in range(k):
            j = jvals[t]
            cnt = 0
            for s in range(k):
                if (not used[s]) and bvals[s] <= j:
                    cnt += 1
            if cnt <= 0:
                raise RuntimeError("resampling placement ran out of eligible places")
            r = np.int64(uniforms[b, kmax + t] * cnt)
            if r >= cnt:
                r = cnt - 1
            c = 0
            for s in range(k):
                if (not used[s]) and bvals[s] <= j:
                    if c == r:
                        used[s] = True
                        outs[b, i_idx[s] - 1] = j
                        break
                    c += 1


@njit(cache=True)
def lis_batch(perms, out):
    nbatch = perms.shape[0]
    for b in range(nbatch):
        out[b] = lis_patience(perms[b])
