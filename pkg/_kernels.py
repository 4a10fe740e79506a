# _kernels.py - compiled sweeps shared by the flooding and sequential engines
#
# Layout follows TannerGraph: edges in (cn, vn) order, CSR-style incidence
# lists cn_ptr/cn_edges and vn_ptr/vn_edges. VN->CN bounds are stored
# multiplied by the edge weight, CN->VN bounds in signal units.
import numpy as np
from numba import njit


@njit(cache=True)
def vn_bounds(cv_lo, cv_hi, vn_ptr, vn_edges, v, skip_edge):
    """max of incoming lowers, min of incoming uppers at VN v (skip_edge < 0 keeps all)"""
    lo = -np.inf
    hi = np.inf
    for k in range(vn_ptr[v], vn_ptr[v + 1]):
        e = vn_edges[k]
        if e == skip_edge:
            continue
        if cv_lo[e] > lo:
            lo = cv_lo[e]
        if cv_hi[e] < hi:
            hi = cv_hi[e]
    if lo == -np.inf:
        lo = 0.0
    return lo, hi


@njit(cache=True)
def cn_bounds(vc_lo, vc_hi, cn_ptr, cn_edges, weight, y_c, c, e):
    """CN c -> edge e bounds from the other incoming VN messages; lower clipped at 0"""
    sum_hi = 0.0
    sum_lo = 0.0
    for k in range(cn_ptr[c], cn_ptr[c + 1]):
        other = cn_edges[k]
        if other != e:
            sum_hi += vc_hi[other]
            sum_lo += vc_lo[other]
    lo = (y_c - sum_hi) / weight[e]
    if lo < 0.0:
        lo = 0.0
    hi = (y_c - sum_lo) / weight[e]
    return lo, hi


@njit(cache=True)
def flooding_sweep(vn_ptr, vn_edges, cn_ptr, cn_edges, weight, y,
                   vc_lo, vc_hi, cv_lo, cv_hi, extrinsic):
    n = vn_ptr.shape[0] - 1
    m = cn_ptr.shape[0] - 1
    vn_msgs = 0
    cn_msgs = 0

    # every VN reads last iteration's CN messages
    for v in range(n):
        for k in range(vn_ptr[v], vn_ptr[v + 1]):
            e = vn_edges[k]
            skip = e if extrinsic else -1
            lo, hi = vn_bounds(cv_lo, cv_hi, vn_ptr, vn_edges, v, skip)
            vc_lo[e] = lo * weight[e]
            vc_hi[e] = hi * weight[e]
            vn_msgs += 1

    for c in range(m):
        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            e = cn_edges[k]
            lo, hi = cn_bounds(vc_lo, vc_hi, cn_ptr, cn_edges, weight, y[c], c, e)
            cv_lo[e] = lo
            cv_hi[e] = hi
            cn_msgs += 1

    return vn_msgs, cn_msgs


@njit(cache=True)
def sequential_sweep(order, vn_ptr, vn_edges, cn_ptr, cn_edges, edge_vn, weight, y,
                     vc_lo, vc_hi, cv_lo_read, cv_hi_read, cv_lo_write, cv_hi_write,
                     vc_time, cv_time, update_count, extrinsic):
    """One SIPA iteration. Pass the same arrays as read and write buffers for
    single-buffer semantics, or separate ones to read last iteration only."""
    vn_msgs = 0
    cn_msgs = 0
    update_count[:] = 0

    for t in range(order.shape[0]):
        c = order[t]
        tj = t + 1

        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            v = edge_vn[cn_edges[k]]
            first_pass = update_count[v] == 0
            for kk in range(vn_ptr[v], vn_ptr[v + 1]):
                e = vn_edges[kk]
                if first_pass or vc_lo[e] < vc_hi[e]:
                    skip = e if extrinsic else -1
                    lo, hi = vn_bounds(cv_lo_read, cv_hi_read, vn_ptr, vn_edges, v, skip)
                    vc_lo[e] = lo * weight[e]
                    vc_hi[e] = hi * weight[e]
                    vc_time[e] = tj
                    vn_msgs += 1
            update_count[v] += 1

        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            e = cn_edges[k]
            lo, hi = cn_bounds(vc_lo, vc_hi, cn_ptr, cn_edges, weight, y[c], c, e)
            cv_lo_write[e] = lo
            cv_hi_write[e] = hi
            cv_time[e] = tj
            cn_msgs += 1

    return vn_msgs, cn_msgs


@njit(cache=True)
def consolidate_all(cv_lo, cv_hi, vn_ptr, vn_edges):
    n = vn_ptr.shape[0] - 1
    lower = np.empty(n, dtype=np.float64)
    upper = np.empty(n, dtype=np.float64)
    for v in range(n):
        lo, hi = vn_bounds(cv_lo, cv_hi, vn_ptr, vn_edges, v, -1)
        lower[v] = lo
        upper[v] = hi
    return lower, upper
