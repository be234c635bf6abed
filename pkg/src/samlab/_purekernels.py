"""Pure-Python fallback for the hot vector kernels.

Deliberately numpy-free: inputs are any C-contiguous float64 buffers and
are walked element by element through ``memoryview``.  Every loop mirrors
the compiled backend (`_fastkernels.pyx`) statement for statement, with
the same left-to-right evaluation and the same sequential reduction
order, so the two backends produce bitwise-identical results.
"""

from math import sqrt

BACKEND = "pure"


def dot(x, y):
    xv = memoryview(x)
    yv = memoryview(y)
    s = 0.0
    for i in range(len(xv)):
        s += xv[i] * yv[i]
    return s


def l2_norm(x):
    xv = memoryview(x)
    s = 0.0
    for i in range(len(xv)):
        s += xv[i] * xv[i]
    return sqrt(s)


def axpy(alpha, x, y, out):
    xv = memoryview(x)
    yv = memoryview(y)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = alpha * xv[i] + yv[i]


def scale(alpha, x, out):
    xv = memoryview(x)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = alpha * xv[i]


def square(x, out):
    xv = memoryview(x)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = xv[i] * xv[i]


def absval(x, out):
    xv = memoryview(x)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = abs(xv[i])


def multiply(x, y, out):
    xv = memoryview(x)
    yv = memoryview(y)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = xv[i] * yv[i]


def subtract(x, y, out):
    xv = memoryview(x)
    yv = memoryview(y)
    ov = memoryview(out)
    for i in range(len(xv)):
        ov[i] = xv[i] - yv[i]


def momentum_update(mu, lam, eta, m, theta, g, out_m, out_theta):
    """Fused m' = mu*m + (g + lam*theta); theta' = theta - eta*m'.

    out_m/out_theta may alias m/theta: each slot is read before it is
    written within one iteration.
    """
    mv = memoryview(m)
    tv = memoryview(theta)
    gv = memoryview(g)
    omv = memoryview(out_m)
    otv = memoryview(out_theta)
    for i in range(len(mv)):
        mi = mu * mv[i] + (gv[i] + lam * tv[i])
        omv[i] = mi
        otv[i] = tv[i] - eta * mi
