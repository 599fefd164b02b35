"""Single-site Gibbs sweep kernel.

Compiled with numba when available; the pure-Python fallback is exact but
slow and only suitable for small problems.  Both paths consume the
pre-drawn uniform array in the same order, so outputs are identical.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def run_sweeps(x, edge_nodes, edge_w, inc_ptr, inc_idx, km_scale, uniforms, out, thin):
    """Run ``uniforms.shape[0]`` sequential sweeps in place on ``x``.

    x          : int8[p] current +/-1 state, updated in place.
    edge_nodes : int64[m, k] 0-based nodes of each hyperedge.
    edge_w     : float64[m] stored weights.
    inc_ptr/idx: CSR incidence, edges containing node r are
                 inc_idx[inc_ptr[r]:inc_ptr[r+1]].
    km_scale   : k! so that the conditional log-odds of +1 is
                 2 * km_scale * sum_{e in r} w_e prod_{s in e, s != r} x_s.
    out        : int8[n_rec, p]; the state after sweep s (1-based) is written
                 to row s//thin - 1 when s % thin == 0 and rows remain.
    """
    p = x.shape[0]
    kk = edge_nodes.shape[1]
    n_rec = out.shape[0]
    rec = 0
    for s in range(uniforms.shape[0]):
        for r in range(p):
            m = 0.0
            for j in range(inc_ptr[r], inc_ptr[r + 1]):
                e = inc_idx[j]
                prod = edge_w[e]
                for t in range(kk):
                    node = edge_nodes[e, t]
                    if node != r:
                        prod *= x[node]
                m += prod
            arg = 2.0 * km_scale * m
            if arg >= 0.0:
                p_plus = 1.0 / (1.0 + math.exp(-arg))
            else:
                ea = math.exp(arg)
                p_plus = ea / (1.0 + ea)
            x[r] = 1 if uniforms[s, r] < p_plus else -1
        if rec < n_rec and (s + 1) % thin == 0:
            for t in range(p):
                out[rec, t] = x[t]
            rec += 1
    return rec


def incidence(edge_nodes: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR node->edge incidence arrays for the sweep kernel."""
    counts = np.zeros(p + 1, dtype=np.int64)
    for e in range(edge_nodes.shape[0]):
        for s in edge_nodes[e]:
            counts[s + 1] += 1
    ptr = np.cumsum(counts)
    idx = np.zeros(ptr[-1], dtype=np.int64)
    fill = ptr[:-1].copy()
    for e in range(edge_nodes.shape[0]):
        for s in edge_nodes[e]:
            idx[fill[s]] = e
            fill[s] += 1
    return ptr, idx
