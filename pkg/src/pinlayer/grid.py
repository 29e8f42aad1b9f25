"""Uniform-grid operators shared by the steady solver, eigensolver and time stepper.

The Laplacian uses a ghost-node Neumann closure, u_{-1} = u_1 and
u_{n} = u_{n-2}.  With trapezoid weights w this operator satisfies w^T L = 0
exactly, which is what makes discrete mass conservation hold.
"""

import numpy as np
import scipy.sparse as sp


def uniform_grid(n):
    x = np.linspace(0.0, 1.0, n)
    return x, 1.0 / (n - 1)


def trapezoid_weights(n):
    h = 1.0 / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def integrate(values, w=None):
    values = np.asarray(values)
    if w is None:
        w = trapezoid_weights(values.shape[-1])
    return values @ w


def laplacian_bands(n):
    """(lower, diag, upper) of the Neumann Laplacian, without the 1/h^2 factor."""
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    diag = -2.0 * np.ones(n)
    upper[0] = 2.0
    lower[-1] = 2.0
    return lower, diag, upper


def laplacian(n, fmt="csr"):
    h = 1.0 / (n - 1)
    lower, diag, upper = laplacian_bands(n)
    return sp.diags([lower, diag, upper], [-1, 0, 1], format=fmt) / h ** 2


def apply_laplacian(u):
    n = u.shape[-1]
    h = 1.0 / (n - 1)
    out = np.empty_like(u)
    out[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
    out[0] = 2.0 * (u[1] - u[0])
    out[-1] = 2.0 * (u[-2] - u[-1])
    return out / h ** 2


def banded_from_tridiag(lower, diag, upper):
    """Pack a tridiagonal matrix into the (3, n) layout used by solve_banded."""
    n = diag.size
    ab = np.zeros((3, n), dtype=np.result_type(lower, diag, upper))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return ab


def crossing(x, u, level):
    """Interior positions where u - level changes sign, by linear interpolation."""
    d = u - level
    idx = np.nonzero(d[:-1] * d[1:] < 0)[0]
    exact = np.nonzero(d == 0)[0]
    pts = [x[i] - d[i] * (x[i + 1] - x[i]) / (d[i + 1] - d[i]) for i in idx]
    pts += [x[i] for i in exact]
    return sorted(pts)
