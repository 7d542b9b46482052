# cython: language_level=3
"""Compiled nodal-analysis kernel.

Same contract as _core_py.solve_system; see that module for the
semantics (including why refinement iterates to stagnation).  Assembly,
the refinement matvecs, and the junction-current residual are flat C
loops; factor/solve go straight to LAPACK.
"""

cimport cython
import numpy as np
from scipy.linalg.cython_lapack cimport dgetrf, dgetrs

KERNEL_NAME = "compiled"

DEF REFINE_MAX = 40


@cython.boundscheck(False)
@cython.wraparound(False)
@cython.initializedcheck(False)
@cython.cdivision(True)
def solve_system(int n_nodes, int n_sources,
                 int[::1] lin_a, int[::1] lin_b, double[::1] lin_g, double[::1] lin_i0,
                 int[::1] dio_a, int[::1] dio_b, double[::1] dio_vf,
                 double[::1] dio_gon, double[::1] dio_goff,
                 int[::1] src_p, int[::1] src_n, double[::1] src_v,
                 int[::1] inj_node, double[::1] inj_amps,
                 double tol, int max_iter):
    cdef int n = n_nodes + n_sources
    cdef int n_lin = lin_a.shape[0]
    cdef int n_dio = dio_a.shape[0]
    cdef int n_inj = inj_node.shape[0]
    cdef int nrhs = 1, info = 0
    cdef int it, k, i, j, a, b_i, row, ref
    cdef double g, i0, v, amps, acc, residual, j_src, vp, vn
    cdef double dx_norm, dx_prev

    A = np.zeros((n, n), dtype=np.float64, order="F")
    A0 = np.zeros((n, n), dtype=np.float64, order="F")
    cdef double[::1, :] A_mv = A
    cdef double[::1, :] A0_mv = A0
    cdef double[::1] b0 = np.zeros(n)
    cdef double[::1] x = np.zeros(n)
    cdef double[::1] r = np.zeros(n)
    cdef double[::1] cur = np.zeros(n)
    cdef double[::1] inj = np.zeros(n_nodes)
    cdef int[::1] ipiv = np.zeros(n, dtype=np.intc)
    states_arr = np.zeros(n_dio, dtype=np.uint8)
    prev_arr = np.zeros(n_dio, dtype=np.uint8)
    new_arr = np.zeros(n_dio, dtype=np.uint8)
    cdef unsigned char[::1] states = states_arr
    cdef unsigned char[::1] prev_states = prev_arr
    cdef unsigned char[::1] new_states = new_arr
    cdef unsigned char changed

    for k in range(n_inj):
        inj[inj_node[k]] += inj_amps[k]

    residual = np.inf
    for it in range(1, max_iter + 1):
        for j in range(n):
            for i in range(n):
                A_mv[i, j] = 0.0
        for i in range(n):
            b0[i] = inj[i] if i < n_nodes else 0.0

        for k in range(n_lin):
            a = lin_a[k]; b_i = lin_b[k]; g = lin_g[k]; i0 = lin_i0[k]
            if a >= 0:
                A_mv[a, a] += g
                b0[a] -= i0
            if b_i >= 0:
                A_mv[b_i, b_i] += g
                b0[b_i] += i0
            if a >= 0 and b_i >= 0:
                A_mv[a, b_i] -= g
                A_mv[b_i, a] -= g
        for k in range(n_dio):
            if states[k]:
                g = dio_gon[k]
                i0 = (dio_goff[k] - dio_gon[k]) * dio_vf[k]
            else:
                g = dio_goff[k]
                i0 = 0.0
            a = dio_a[k]; b_i = dio_b[k]
            if a >= 0:
                A_mv[a, a] += g
                b0[a] -= i0
            if b_i >= 0:
                A_mv[b_i, b_i] += g
                b0[b_i] += i0
            if a >= 0 and b_i >= 0:
                A_mv[a, b_i] -= g
                A_mv[b_i, a] -= g
        for k in range(n_sources):
            row = n_nodes + k
            a = src_p[k]; b_i = src_n[k]
            if a >= 0:
                A_mv[a, row] += 1.0
                A_mv[row, a] += 1.0
            if b_i >= 0:
                A_mv[b_i, row] -= 1.0
                A_mv[row, b_i] -= 1.0
            b0[row] = src_v[k]

        for j in range(n):
            for i in range(n):
                A0_mv[i, j] = A_mv[i, j]

        dgetrf(&n, &n, &A_mv[0, 0], &n, &ipiv[0], &info)
        if info != 0:
            raise ArithmeticError(f"LU factorisation failed (info={info})")
        for i in range(n):
            x[i] = b0[i]
        dgetrs("N", &n, &nrhs, &A_mv[0, 0], &n, &ipiv[0], &x[0], &n, &info)

        # iterative refinement against the unfactored copy, until the
        # correction stalls at the rounding floor
        dx_prev = np.inf
        for ref in range(REFINE_MAX):
            for i in range(n):
                r[i] = b0[i]
            for j in range(n):
                v = x[j]
                if v != 0.0:
                    for i in range(n):
                        r[i] -= A0_mv[i, j] * v
            dgetrs("N", &n, &nrhs, &A_mv[0, 0], &n, &ipiv[0], &r[0], &n, &info)
            dx_norm = 0.0
            for i in range(n):
                x[i] += r[i]
                acc = r[i] if r[i] >= 0.0 else -r[i]
                if acc > dx_norm:
                    dx_norm = acc
            if dx_norm == 0.0 or dx_norm >= 0.5 * dx_prev:
                break
            dx_prev = dx_norm

        # junction-current residual straight from the element equations
        for i in range(n):
            cur[i] = -inj[i] if i < n_nodes else 0.0
        for k in range(n_lin):
            a = lin_a[k]; b_i = lin_b[k]
            v = (x[a] if a >= 0 else 0.0) - (x[b_i] if b_i >= 0 else 0.0)
            amps = lin_g[k] * v + lin_i0[k]
            if a >= 0:
                cur[a] += amps
            if b_i >= 0:
                cur[b_i] -= amps
        for k in range(n_dio):
            a = dio_a[k]; b_i = dio_b[k]
            v = (x[a] if a >= 0 else 0.0) - (x[b_i] if b_i >= 0 else 0.0)
            if states[k]:
                amps = dio_gon[k] * v + (dio_goff[k] - dio_gon[k]) * dio_vf[k]
            else:
                amps = dio_goff[k] * v
            if a >= 0:
                cur[a] += amps
            if b_i >= 0:
                cur[b_i] -= amps
        for k in range(n_sources):
            j_src = x[n_nodes + k]
            a = src_p[k]; b_i = src_n[k]
            vp = x[a] if a >= 0 else 0.0
            vn = x[b_i] if b_i >= 0 else 0.0
            if a >= 0:
                cur[a] += j_src
            if b_i >= 0:
                cur[b_i] -= j_src
            cur[n_nodes + k] = vp - vn - src_v[k]
        residual = 0.0
        for i in range(n):
            acc = cur[i] if cur[i] >= 0.0 else -cur[i]
            if acc > residual:
                residual = acc

        changed = 0
        for k in range(n_dio):
            a = dio_a[k]; b_i = dio_b[k]
            v = (x[a] if a >= 0 else 0.0) - (x[b_i] if b_i >= 0 else 0.0)
            new_states[k] = 1 if v > dio_vf[k] else 0
            if new_states[k] != states[k]:
                changed = 1
        if not changed and residual <= tol:
            return (np.asarray(x).copy(), states_arr.copy(), prev_arr.copy(),
                    it, residual, True)
        for k in range(n_dio):
            prev_states[k] = states[k]
            states[k] = new_states[k]

    return (np.asarray(x).copy(), states_arr.copy(), prev_arr.copy(),
            max_iter, residual, False)
