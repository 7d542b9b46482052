"""Reference nodal-analysis kernel (numpy + LAPACK via scipy).

The compiled kernel in _core.pyx implements the same contract; this one
is the fallback and the semantic reference.  Unknown vector layout is
[node voltages, source currents], ground excluded.  The solved source
current is the current flowing internally from the + terminal to the -
terminal (passive sign), so a source driving a load solves negative.

Piecewise-linear elements are handled by fixed-point iteration on the
diode on/off state vector: assemble, factor, solve, iterative
refinement to stagnation, re-evaluate states.  Converged means the
state vector repeats and the element-wise junction-current residual is
inside tolerance.

Refinement is iterated, not single-shot: conductances span ~15 decades
(plugged-in switch vs sense leak), so one pass leaves mV-scale error on
nodes that hang behind off-state switches.  Each pass contracts the
error until the correction stops shrinking.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

KERNEL_NAME = "python"

REFINE_MAX = 40


def _stamp_linear(A, b, a_idx, b_idx, g, i0):
    ma = a_idx >= 0
    mb = b_idx >= 0
    both = ma & mb
    np.add.at(A, (a_idx[ma], a_idx[ma]), g[ma])
    np.add.at(A, (b_idx[mb], b_idx[mb]), g[mb])
    np.add.at(A, (a_idx[both], b_idx[both]), -g[both])
    np.add.at(A, (b_idx[both], a_idx[both]), -g[both])
    np.subtract.at(b, a_idx[ma], i0[ma])
    np.add.at(b, b_idx[mb], i0[mb])


def _accumulate_currents(cur, a_idx, b_idx, amps):
    ma = a_idx >= 0
    mb = b_idx >= 0
    np.add.at(cur, a_idx[ma], amps[ma])
    np.subtract.at(cur, b_idx[mb], amps[mb])


def _branch_voltages(x, a_idx, b_idx):
    va = np.where(a_idx >= 0, x[np.maximum(a_idx, 0)], 0.0)
    vb = np.where(b_idx >= 0, x[np.maximum(b_idx, 0)], 0.0)
    return va - vb


def solve_system(n_nodes, n_sources,
                 lin_a, lin_b, lin_g, lin_i0,
                 dio_a, dio_b, dio_vf, dio_gon, dio_goff,
                 src_p, src_n, src_v,
                 inj_node, inj_amps,
                 tol, max_iter):
    """Returns (x, states, prev_states, iterations, residual, converged)."""
    n = n_nodes + n_sources
    n_dio = len(dio_a)
    states = np.zeros(n_dio, dtype=np.uint8)
    prev_states = states.copy()

    inj = np.zeros(n_nodes, dtype=np.float64)
    if len(inj_node):
        np.add.at(inj, inj_node, inj_amps)

    x = np.zeros(n, dtype=np.float64)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        g_d = np.where(states, dio_gon, dio_goff)
        i0_d = np.where(states, (dio_goff - dio_gon) * dio_vf, 0.0)

        A = np.zeros((n, n), dtype=np.float64)
        b = np.zeros(n, dtype=np.float64)
        b[:n_nodes] = inj
        _stamp_linear(A, b, lin_a, lin_b, lin_g, lin_i0)
        if n_dio:
            _stamp_linear(A, b, dio_a, dio_b, g_d, i0_d)
        for k in range(n_sources):
            row = n_nodes + k
            for node, sign in ((src_p[k], 1.0), (src_n[k], -1.0)):
                if node >= 0:
                    A[node, row] += sign
                    A[row, node] += sign
            b[row] = src_v[k]

        lu = lu_factor(A)
        x = lu_solve(lu, b)
        # iterative refinement against the unfactored matrix, until the
        # correction stalls at the rounding floor
        dx_prev = np.inf
        for _ in range(REFINE_MAX):
            dx = lu_solve(lu, b - A @ x)
            x += dx
            dx_norm = float(np.max(np.abs(dx))) if n else 0.0
            if dx_norm == 0.0 or dx_norm >= 0.5 * dx_prev:
                break
            dx_prev = dx_norm

        # KCL residual from the element equations, not the matrix
        cur = np.zeros(n, dtype=np.float64)
        _accumulate_currents(cur[:n_nodes], lin_a, lin_b,
                             lin_g * _branch_voltages(x, lin_a, lin_b) + lin_i0)
        if n_dio:
            _accumulate_currents(cur[:n_nodes], dio_a, dio_b,
                                 g_d * _branch_voltages(x, dio_a, dio_b) + i0_d)
        for k in range(n_sources):
            j = x[n_nodes + k]
            vp = x[src_p[k]] if src_p[k] >= 0 else 0.0
            vn = x[src_n[k]] if src_n[k] >= 0 else 0.0
            if src_p[k] >= 0:
                cur[src_p[k]] += j
            if src_n[k] >= 0:
                cur[src_n[k]] -= j
            cur[n_nodes + k] = vp - vn - src_v[k]
        cur[:n_nodes] -= inj
        residual = float(np.max(np.abs(cur))) if n else 0.0

        if n_dio:
            v_d = _branch_voltages(x, dio_a, dio_b)
            new_states = (v_d > dio_vf).astype(np.uint8)
        else:
            new_states = states

        if np.array_equal(new_states, states) and residual <= tol:
            return x, states.copy(), prev_states.copy(), iteration, residual, True
        prev_states = states
        states = new_states

    return x, states.copy(), prev_states.copy(), max_iter, residual, False
