"""Finite-difference linearization and its eigenvalues closest to zero."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .. import grid
from ..errors import FactorizationFailed
from ..model import BistableModel

# relative mass above which an eigenvector is taken to violate int (p + q) dx = 0
MASS_FLAG = 1e-4


@dataclass
class LinearizedOperator:
    """Block operator [[eps^2 d_xx + f_u, f_v], [-f_u, D d_xx - f_v]] on a uniform grid."""

    n: int
    epsilon: float
    D: float
    fu: np.ndarray
    fv: np.ndarray
    matrix: sp.csc_matrix
    weights: np.ndarray

    def apply(self, p, q):
        out = self.matrix @ np.concatenate([p, q])
        return out[: self.n], out[self.n:]

    def mass(self, p, q):
        """Discrete constraint functional int (p + q) dx."""
        return self.weights @ (p + q)


def linearize(model: BistableModel, state) -> LinearizedOperator:
    u, v = state.u, state.v
    n = u.size
    eps, D = state.epsilon, state.D
    fu = np.asarray(model.f_u(u, v), dtype=float) * np.ones(n)
    fv = np.asarray(model.f_v(u, v), dtype=float) * np.ones(n)
    L = grid.laplacian(n, "csr")
    A = sp.bmat([[eps ** 2 * L + sp.diags(fu), sp.diags(fv)],
                 [sp.diags(-fu), D * L - sp.diags(fv)]], format="csc")
    return LinearizedOperator(n=n, epsilon=eps, D=D, fu=fu, fv=fv, matrix=A,
                              weights=grid.trapezoid_weights(n))


@dataclass
class DirectSpectrum:
    eigenvalues: np.ndarray
    mass_ratio: np.ndarray
    constrained: np.ndarray
    vectors: np.ndarray
    sigma: float

    @property
    def leading(self):
        """Constrained eigenvalue with the largest real part."""
        lam = self.eigenvalues[self.constrained]
        if lam.size == 0:
            return None
        return complex(lam[np.argmax(lam.real)])

    @property
    def flagged(self):
        """Eigenvalues whose eigenvectors carry mass (not admissible perturbations)."""
        return self.eigenvalues[~self.constrained]

    def to_dict(self):
        return {"eigenvalues": [complex(z) for z in self.eigenvalues],
                "mass_ratio": [float(r) for r in self.mass_ratio],
                "constrained": [bool(c) for c in self.constrained],
                "leading": self.leading, "sigma": self.sigma}


def direct_spectrum(op: LinearizedOperator, k: int = 6, sigma: float = 1e-4,
                    retries: int = 3) -> DirectSpectrum:
    """k eigenvalues nearest ``sigma`` by shift-invert, classified by the mass functional.

    The shift sits slightly off zero because the unconstrained operator has an
    eigenvalue at zero up to the Newton tolerance.  Eigenvalues with lambda != 0
    satisfy the constraint automatically; the near-zero mode does not and is
    flagged through its relative mass |int (p+q)| / int (|p|+|q|).
    """
    n = op.n
    # fixed start vector keeps ARPACK deterministic
    v0 = np.cos(np.linspace(0.0, 3.0, 2 * n)) + 0.5
    last = None
    shift = sigma
    for attempt in range(retries + 1):
        try:
            vals, vecs = spla.eigs(op.matrix, k=k, sigma=shift, v0=v0, which="LM",
                                   tol=1e-12, maxiter=20000)
            break
        except (RuntimeError, spla.ArpackNoConvergence) as exc:
            last = exc
            shift = sigma * (1.0 + 0.37 * (attempt + 1)) + 1e-7 * (attempt + 1)
    else:
        raise FactorizationFailed("shift-invert eigensolve failed", sigma=sigma,
                                  error=str(last))
    w = op.weights
    ratios = []
    for j in range(vals.size):
        p, q = vecs[:n, j], vecs[n:, j]
        ratios.append(abs(w @ (p + q)) / (w @ (np.abs(p) + np.abs(q))))
    ratios = np.array(ratios)
    order = np.lexsort((vals.imag, -vals.real))
    vals, vecs, ratios = vals[order], vecs[:, order], ratios[order]
    # real matrix: snap tiny imaginary parts produced by complex arithmetic
    vals = np.where(np.abs(vals.imag) < 1e-12 * np.maximum(np.abs(vals), 1e-300),
                    vals.real + 0j, vals)
    return DirectSpectrum(eigenvalues=vals, mass_ratio=ratios, constrained=ratios < MASS_FLAG,
                          vectors=vecs, sigma=shift)


def polish_eigenvalue(op: LinearizedOperator, lam0, rel_offset: float = 1e-3) -> complex:
    """Re-solve for the single eigenvalue nearest ``lam0`` with the shift placed next to it.

    With the shift at the origin the near-zero mode dominates the shift-inverted
    operator and limits the relative accuracy of small eigenvalues to about 1e-5;
    a shift next to the target removes that limitation.
    """
    lam0 = complex(lam0)
    sigma = lam0 + rel_offset * max(abs(lam0), 1e-8)
    if abs(sigma.imag) == 0.0:
        sigma = sigma.real
    v0 = np.cos(np.linspace(0.0, 3.0, 2 * op.n)) + 0.5
    try:
        vals = spla.eigs(op.matrix, k=1, sigma=sigma, v0=v0, which="LM", tol=1e-14,
                         maxiter=20000, return_eigenvectors=False)
    except (RuntimeError, spla.ArpackNoConvergence) as exc:
        raise FactorizationFailed("polishing eigensolve failed", sigma=sigma,
                                  error=str(exc)) from exc
    lam = complex(vals[0])
    if abs(lam.imag) < 1e-12 * abs(lam):
        lam = complex(lam.real, 0.0)
    return lam


def richardson(coarse, fine, order: int = 2):
    """Extrapolate a quantity computed on grids with spacing h and h/2."""
    r = 2.0 ** order
    return (r * fine - coarse) / (r - 1.0)


def symbol_eigenvalues(fu, fv, epsilon, D, n_modes, n_grid=None):
    """Eigenvalues of a constant-coefficient linearization, mode by mode.

    For p, q proportional to cos(k pi x) the operator reduces to the 2x2 matrix
    [[-eps^2 m + fu, fv], [-fu, -D m - fv]] with m = (k pi)^2, or with the
    finite-difference symbol m = 4 sin^2(k pi h / 2) / h^2 when ``n_grid`` is given.
    """
    out = []
    for k in range(n_modes):
        if n_grid is None:
            m = (k * np.pi) ** 2
        else:
            h = 1.0 / (n_grid - 1)
            m = 4.0 * np.sin(0.5 * k * np.pi * h) ** 2 / h ** 2
        out.extend(np.linalg.eigvals(np.array([[-epsilon ** 2 * m + fu, fv],
                                               [-fu, -D * m - fv]])))
    return np.array(out)
