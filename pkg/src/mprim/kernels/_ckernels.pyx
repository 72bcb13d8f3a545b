# Compiled implementations of the hot numerical kernels.
# Mirrors mprim.kernels.py_kernels; keep signatures and evaluation order
# in sync with that module.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "compiled"


cdef void _matmul(double* a, double* b, double* c,
                  int m, int n, int k, bint trans_a, bint trans_b) noexcept:
    # c(m, n) = op(a) @ op(b) on row-major buffers; BLAS is column-major,
    # so compute c^T = op(b)^T @ op(a)^T by swapping the operands
    cdef double one = 1.0, zero = 0.0
    cdef char ta = c'T' if trans_b else c'N'
    cdef char tb = c'T' if trans_a else c'N'
    cdef int lda = (k if trans_b else n)
    cdef int ldb = (m if trans_a else k)
    dgemm(&ta, &tb, &n, &m, &k, &one, b, &lda, a, &ldb, &zero, c, &n)


def basis_matrix(object z_in, object centers_in, double width):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = \
        np.ascontiguousarray(z_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] centers = \
        np.ascontiguousarray(centers_in, dtype=np.float64)
    cdef Py_ssize_t T = z.shape[0], N = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((T, N))
    cdef Py_ssize_t t, i
    cdef double s, d
    for t in range(T):
        s = 0.0
        for i in range(N):
            d = z[t] - centers[i]
            out[t, i] = exp(-(d * d) / (2.0 * width))
            s += out[t, i]
        for i in range(N):
            out[t, i] /= s
    return out


cdef _dense_layer(cnp.ndarray[cnp.float64_t, ndim=2] a,
                  cnp.ndarray[cnp.float64_t, ndim=2] w,
                  cnp.ndarray[cnp.float64_t, ndim=1] b,
                  bint squash):
    cdef int B = <int> a.shape[0], D = <int> a.shape[1], K = <int> w.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((B, K))
    cdef Py_ssize_t n, j
    _matmul(&a[0, 0], &w[0, 0], &out[0, 0], B, K, D, False, False)
    for n in range(B):
        for j in range(K):
            out[n, j] += b[j]
    if squash:
        np.tanh(out, out)   # numpy's simd tanh beats a scalar libm loop
    return out


def mlp_forward_acts(object x, list weights, list biases):
    cdef list acts = [np.ascontiguousarray(x, dtype=np.float64)]
    cdef Py_ssize_t last = len(weights) - 1, k
    for k in range(len(weights)):
        acts.append(_dense_layer(
            acts[len(acts) - 1],
            np.ascontiguousarray(weights[k], dtype=np.float64),
            np.ascontiguousarray(biases[k], dtype=np.float64),
            k < last))
    return acts


def mlp_backward_acts(list acts, list weights, object delta_out):
    cdef Py_ssize_t L = len(weights)
    cdef list grads_w = [None] * L
    cdef list grads_b = [None] * L
    cdef cnp.ndarray[cnp.float64_t, ndim=2] delta = \
        np.ascontiguousarray(delta_out, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a, w, gw, nxt
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gb
    cdef Py_ssize_t k, n, i, j
    cdef int B, D, K
    cdef double av
    for k in range(L - 1, -1, -1):
        a = np.ascontiguousarray(acts[k], dtype=np.float64)
        B = <int> a.shape[0]
        D = <int> a.shape[1]
        K = <int> delta.shape[1]
        gw = np.empty((D, K))
        gb = np.zeros(K)
        _matmul(&a[0, 0], &delta[0, 0], &gw[0, 0], D, K, B, True, False)
        for n in range(B):
            for j in range(K):
                gb[j] += delta[n, j]
        grads_w[k] = gw
        grads_b[k] = gb
        if k > 0:
            w = np.ascontiguousarray(weights[k], dtype=np.float64)
            nxt = np.empty((B, D))
            _matmul(&delta[0, 0], &w[0, 0], &nxt[0, 0], B, D, K, False, True)
            for n in range(B):
                for i in range(D):
                    av = a[n, i]
                    nxt[n, i] *= (1.0 - av * av)
            delta = nxt
    return grads_w, grads_b


def dmp_rollout(object start_in, object goal_in, object weights_in,
                object centers_in, object widths_in, double tau,
                double alpha_z, double beta_z, double alpha_x,
                double dt, Py_ssize_t steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] start = \
        np.ascontiguousarray(start_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] goal = \
        np.ascontiguousarray(goal_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = \
        np.ascontiguousarray(weights_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] centers = \
        np.ascontiguousarray(centers_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] widths = \
        np.ascontiguousarray(widths_in, dtype=np.float64)
    cdef Py_ssize_t J = start.shape[0], N = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps, J))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = start.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.zeros(J)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] psi = np.empty(N)
    cdef Py_ssize_t s, i, j
    cdef double x, psum, d, fmix, f, v_dot
    for j in range(J):
        out[0, j] = q[j]
    for s in range(1, steps):
        x = exp(-alpha_x * ((s - 1) * dt) / tau)
        psum = 0.0
        for i in range(N):
            d = x - centers[i]
            psi[i] = exp(-widths[i] * d * d)
            psum += psi[i]
        for j in range(J):
            fmix = 0.0
            for i in range(N):
                fmix += w[j, i] * psi[i]
            f = fmix / psum * x * (goal[j] - start[j])
            v_dot = (alpha_z * (beta_z * (goal[j] - q[j]) - v[j]) + f) / tau
            q[j] = q[j] + dt * (v[j] / tau)
            v[j] = v[j] + dt * v_dot
            out[s, j] = q[j]
    return out
