# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled vector kernels.

Mirrors `_purekernels.py` statement for statement: same expression
shapes, same sequential reduction order, and the extension is built
with -ffp-contract=off, so results are bitwise identical to the pure
backend.
"""

from libc.math cimport sqrt, fabs

BACKEND = "compiled"


def dot(double[::1] x, double[::1] y):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s += x[i] * y[i]
    return s


def l2_norm(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s += x[i] * x[i]
    return sqrt(s)


def axpy(double alpha, double[::1] x, double[::1] y, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = alpha * x[i] + y[i]


def scale(double alpha, double[::1] x, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = alpha * x[i]


def square(double[::1] x, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = x[i] * x[i]


def absval(double[::1] x, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = fabs(x[i])


def multiply(double[::1] x, double[::1] y, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = x[i] * y[i]


def subtract(double[::1] x, double[::1] y, double[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = x[i] - y[i]


def momentum_update(double mu, double lam, double eta,
                    double[::1] m, double[::1] theta, double[::1] g,
                    double[::1] out_m, double[::1] out_theta):
    """Fused m' = mu*m + (g + lam*theta); theta' = theta - eta*m'.

    out_m/out_theta may alias m/theta: each slot is read before it is
    written within one iteration.
    """
    cdef Py_ssize_t i, n = m.shape[0]
    cdef double mi
    for i in range(n):
        mi = mu * m[i] + (g[i] + lam * theta[i])
        out_m[i] = mi
        out_theta[i] = theta[i] - eta * mi
