"""Compiled kernels for Newman-Ziff sweeps and binomial convolution."""

from __future__ import annotations

import numpy as np
from numba import njit

# wrap_first layout: one slot per dimension, then "any", then "all"
NEVER = np.iinfo(np.int64).max


@njit(cache=True)
def _find(x, parent, disp, acc, dim):
    """Root of ``x`` with path halving; ``acc`` receives pos(x) - pos(root)."""
    for d in range(dim):
        acc[d] = 0
    while parent[x] != x:
        up = parent[x]
        top = parent[up]
        if top != up:
            for d in range(dim):
                disp[x * dim + d] += disp[up * dim + d]
            parent[x] = top
        for d in range(dim):
            acc[d] += disp[x * dim + d]
        x = parent[x]
    return x


@njit(cache=True)
def _union(e, ea, eb, eoff, parent, size, colcount, wrapmask, disp, da, db, dim):
    """Add edge ``e``; return the root it ends up in and whether it merged."""
    ra = _find(ea[e], parent, disp, da, dim)
    rb = _find(eb[e], parent, disp, db, dim)
    if ra == rb:
        for d in range(dim):
            if da[d] + eoff[e, d] - db[d] != 0:
                wrapmask[ra] |= np.int64(1) << d
        return ra, False
    if size[ra] >= size[rb]:
        for d in range(dim):
            disp[rb * dim + d] = eoff[e, d] + da[d] - db[d]
        parent[rb] = ra
        size[ra] += size[rb]
        colcount[ra] += colcount[rb]
        wrapmask[ra] |= wrapmask[rb]
        return ra, True
    for d in range(dim):
        disp[ra * dim + d] = db[d] - da[d] - eoff[e, d]
    parent[ra] = rb
    size[rb] += size[ra]
    colcount[rb] += colcount[ra]
    wrapmask[rb] |= wrapmask[ra]
    return rb, True


@njit(cache=True)
def nz_sweep(ea, eb, eoff, order, n_pre, occupied, colored, largest, colored_largest, wrap_first):
    """One Newman-Ziff trial.

    Edges ``order[:n_pre]`` are added silently; after that the state is
    recorded once before and once after every further edge, so the record
    arrays have ``len(order) - n_pre + 1`` entries.  ``wrap_first`` receives
    the swept-bond count at which a cluster first wraps in each dimension,
    in any dimension, and in all dimensions (``NEVER`` if it does not).
    Returns the number of successful merges.
    """
    n_nodes = occupied.shape[0]
    dim = eoff.shape[1]
    parent = np.arange(n_nodes)
    size = np.zeros(n_nodes, dtype=np.int64)
    colcount = np.zeros(n_nodes, dtype=np.int64)
    wrapmask = np.zeros(n_nodes, dtype=np.int64)
    disp = np.zeros(n_nodes * dim, dtype=np.int64)
    da = np.empty(dim, dtype=np.int64)
    db = np.empty(dim, dtype=np.int64)
    maxsize = 0
    maxroot = -1
    for i in range(n_nodes):
        if occupied[i]:
            size[i] = 1
            if colored[i]:
                colcount[i] = 1
            if maxroot < 0:
                maxroot = i
                maxsize = 1
    for j in range(wrap_first.shape[0]):
        wrap_first[j] = NEVER
    full = (np.int64(1) << dim) - 1
    seen = np.int64(0)
    merges = 0
    n_sweep = order.shape[0] - n_pre
    for i in range(order.shape[0]):
        if i >= n_pre:
            k = i - n_pre
            if k == 0:
                largest[0] = maxsize
                colored_largest[0] = colcount[maxroot] if maxroot >= 0 else 0
        e = order[i]
        ra = ea[e]
        for d in range(dim):
            da[d] = 0
        while parent[ra] != ra:
            up = parent[ra]
            top = parent[up]
            if top != up:
                for d in range(dim):
                    disp[ra * dim + d] += disp[up * dim + d]
                parent[ra] = top
            for d in range(dim):
                da[d] += disp[ra * dim + d]
            ra = parent[ra]
        rb = eb[e]
        for d in range(dim):
            db[d] = 0
        while parent[rb] != rb:
            up = parent[rb]
            top = parent[up]
            if top != up:
                for d in range(dim):
                    disp[rb * dim + d] += disp[up * dim + d]
                parent[rb] = top
            for d in range(dim):
                db[d] += disp[rb * dim + d]
            rb = parent[rb]
        if ra == rb:
            r = ra
            for d in range(dim):
                if da[d] + eoff[e, d] - db[d] != 0:
                    wrapmask[r] |= np.int64(1) << d
        else:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
                for d in range(dim):
                    disp[rb * dim + d] = db[d] - da[d] - eoff[e, d]
            else:
                for d in range(dim):
                    disp[rb * dim + d] = eoff[e, d] + da[d] - db[d]
            r = ra
            parent[rb] = r
            size[r] += size[rb]
            colcount[r] += colcount[rb]
            wrapmask[r] |= wrapmask[rb]
            merges += 1
            if size[r] > maxsize:
                maxsize = size[r]
                maxroot = r
        new = wrapmask[r] & ~seen
        if new != 0:
            k_now = i - n_pre + 1 if i >= n_pre else 0
            for d in range(dim):
                if (new >> d) & 1:
                    wrap_first[d] = k_now
            if seen == 0:
                wrap_first[dim] = k_now
            seen |= new
            if seen == full:
                wrap_first[dim + 1] = k_now
        if i >= n_pre:
            k = i - n_pre + 1
            largest[k] = maxsize
            colored_largest[k] = colcount[maxroot] if maxroot >= 0 else 0
    if n_sweep == 0:
        largest[0] = maxsize
        colored_largest[0] = colcount[maxroot] if maxroot >= 0 else 0
    return merges


@njit(cache=True)
def component_pass(ea, eb, eoff, edges, occupied, colored, roots, wrapmask_out):
    """Union-find over ``edges``; fills each node's root and each root's wrap mask."""
    n_nodes = occupied.shape[0]
    dim = eoff.shape[1]
    parent = np.arange(n_nodes)
    size = np.zeros(n_nodes, dtype=np.int64)
    colcount = np.zeros(n_nodes, dtype=np.int64)
    wrapmask = np.zeros(n_nodes, dtype=np.int64)
    disp = np.zeros(n_nodes * dim, dtype=np.int64)
    da = np.empty(dim, dtype=np.int64)
    db = np.empty(dim, dtype=np.int64)
    for i in range(n_nodes):
        if occupied[i]:
            size[i] = 1
            if colored[i]:
                colcount[i] = 1
    merges = 0
    for i in range(edges.shape[0]):
        r, merged = _union(edges[i], ea, eb, eoff, parent, size, colcount, wrapmask, disp, da, db, dim)
        if merged:
            merges += 1
    for i in range(n_nodes):
        roots[i] = _find(i, parent, disp, da, dim)
    for i in range(n_nodes):
        wrapmask_out[i] = wrapmask[i]
    return merges


@njit(cache=True)
def binomial_window(m, p, w, cutoff):
    """Unnormalised Bin(m, p) weights in ``w[lo:hi+1]`` (mode weight 1).

    Returns ``(lo, hi, total)``.
    """
    if p <= 0.0:
        w[0] = 1.0
        return 0, 0, 1.0
    if p >= 1.0:
        w[m] = 1.0
        return m, m, 1.0
    mode = int((m + 1) * p)
    if mode > m:
        mode = m
    w[mode] = 1.0
    ratio = p / (1.0 - p)
    hi = mode
    while hi < m:
        nxt = w[hi] * (m - hi) / (hi + 1.0) * ratio
        if nxt < cutoff:
            break
        hi += 1
        w[hi] = nxt
    lo = mode
    while lo > 0:
        nxt = w[lo] * lo / (m - lo + 1.0) / ratio
        if nxt < cutoff:
            break
        lo -= 1
        w[lo] = nxt
    total = 0.0
    for k in range(lo, hi + 1):
        total += w[k]
    return lo, hi, total


@njit(cache=True)
def convolve_trial(p_grid, curves, steps, out_curves, out_steps, cutoff):
    """Canonical averages of one trial's microcanonical record.

    ``curves`` is a (C, m+1) array of per-bond-count observables; ``steps``
    lists bond counts at which 0/1 step observables switch on.  Output
    arrays are (C, G) and (S, G).
    """
    m = curves.shape[1] - 1
    w = np.empty(m + 1)
    for g in range(p_grid.shape[0]):
        lo, hi, total = binomial_window(m, p_grid[g], w, cutoff)
        for c in range(curves.shape[0]):
            acc = 0.0
            for k in range(lo, hi + 1):
                acc += w[k] * curves[c, k]
            out_curves[c, g] = acc / total
        for s in range(steps.shape[0]):
            first = steps[s]
            if first > hi:
                out_steps[s, g] = 0.0
            elif first <= lo:
                out_steps[s, g] = 1.0
            else:
                acc = 0.0
                for k in range(first, hi + 1):
                    acc += w[k]
                out_steps[s, g] = acc / total
