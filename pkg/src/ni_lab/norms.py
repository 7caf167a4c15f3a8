"""Fourier-Lebesgue and modulation norms of grid functions, and weight masses."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._validation import DomainError, check_index

FOURIER_LEBESGUE = "FL"
MODULATION = "MOD"


@dataclass(frozen=True)
class NormSpec:
    space: str
    index: float
    s: float

    def __post_init__(self):
        if self.space not in (FOURIER_LEBESGUE, MODULATION):
            raise DomainError(f"unknown space {self.space!r}")
        object.__setattr__(self, "index", check_index(self.index))

    def __call__(self, f):
        if self.space == FOURIER_LEBESGUE:
            return fl_norm(f, self.index, self.s)
        return mod_norm(f, self.index, self.s)


def japanese(r):
    return np.sqrt(1.0 + np.asarray(r) ** 2)


def _lp(weighted, p, cell):
    if math.isinf(p):
        return float(np.max(weighted)) if weighted.size else 0.0
    return float((cell * np.sum(weighted**p)) ** (1.0 / p))


def fl_norm(f, p, s):
    """``|| <xi>^s f ||_{L^p}`` with quadrature weight ``h^d``."""
    p = check_index(p)
    lat = f.lattice
    return _lp(japanese(lat.radius) ** s * np.abs(f.values), p, lat.cell)


def low_freq_norm(f, p, s, side=1.0):
    """Fourier-Lebesgue norm restricted to the half-open cube ``Q_side`` at the origin."""
    p = check_index(p)
    lat = f.lattice
    sl = lat.cube_slices(np.zeros(lat.d), side) if side / lat.h >= 1 else None
    if sl is None:
        sl = (slice(lat.c, lat.c + 1),) * lat.d
    w = japanese(lat.radius[sl]) ** s * np.abs(f.values[sl])
    return _lp(w, p, lat.cell)


def bump(t):
    """Smooth profile: 1 on ``|t| <= 1/2``, 0 on ``|t| >= 3/4``."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 0.75)
    u = (t[mid] - 0.5) / 0.25
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - u**2))
    return out


def partition_1d(x, ns):
    """Matrix ``sigma_n(x_j)`` for the one-dimensional uniform partition of unity."""
    x = np.asarray(x, dtype=float)
    lo = int(math.floor(x.min())) - 1 if x.size else 0
    hi = int(math.ceil(x.max())) + 1 if x.size else 0
    total = sum(bump(x - n) for n in range(lo, hi + 1))
    return np.stack([bump(x - n) / total for n in ns])


def partition_sum(lattice, n_range=None):
    """``sum_n sigma_n`` at every node, computed over the truncated index set."""
    ns = _mod_indices(lattice) if n_range is None else n_range
    s1 = partition_1d(lattice.axis, ns).sum(axis=0)
    out = s1
    for _ in range(lattice.d - 1):
        out = np.multiply.outer(out, s1)
    return out


def _mod_indices(lattice):
    r = int(math.ceil(lattice.half_width)) + 1
    return np.arange(-r, r + 1)


def mod_energies(f, n_range=None):
    """Array ``E[n] = h^d sum_xi sigma_n(xi)^2 |f(xi)|^2`` over the tensor index set.

    The tensor bump makes ``sigma_n`` a product over axes, so the sum factorises into
    one matrix contraction per axis.
    """
    lat = f.lattice
    ns = _mod_indices(lat) if n_range is None else np.asarray(n_range)
    s2 = partition_1d(lat.axis, ns) ** 2
    e = np.abs(f.values) ** 2
    for ax in range(lat.d):
        e = np.tensordot(s2, e, axes=([1], [ax]))
        e = np.moveaxis(e, 0, ax)
    return ns, lat.cell * e


def _mod_weights(ns, d, s):
    grids = np.meshgrid(*([ns.astype(float)] * d), indexing="ij")
    n_abs = np.sqrt(sum(g**2 for g in grids))
    return (1.0 + n_abs) ** s, n_abs


def mod_norm(f, q, s, n_cut=None):
    """Modulation norm ``|| (1+|n|)^s ||sigma_n f||_{L^2} ||_{l^q}``.

    ``n_cut`` restricts the outer sum to ``|n|_inf <= n_cut``.
    """
    q = check_index(q, "q")
    ns, e = mod_energies(f)
    weights, _ = _mod_weights(ns, f.lattice.d, s)
    terms = weights * np.sqrt(e)
    if n_cut is not None:
        grids = np.meshgrid(*([ns] * f.lattice.d), indexing="ij")
        keep = np.max(np.abs(np.stack(grids)), axis=0) <= n_cut
        terms = terms[keep]
    if math.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms**q) ** (1.0 / q))


def closed_form_mass(A, p, s, d=1):
    """Regime value of the weight mass: 1, ``(log A)^(1/p)`` or ``A^(d/p + s)``."""
    p = check_index(p)
    inv = 0.0 if math.isinf(p) else 1.0 / p
    crit = -d * inv
    if math.isclose(s, crit, rel_tol=0, abs_tol=1e-12):
        return math.log(A) ** inv
    if s < crit:
        return 1.0
    return A ** (d * inv + s)


def weight_mass(A, p, s, d=1, panels_per_unit=1, order=10):
    """Quadrature of ``|| <xi>^s ||_{L^p(Q_A)}`` together with its closed-form regime value.

    Returns ``(quadrature, closed_form)``.
    """
    if A < 1:
        raise DomainError(f"A must be >= 1, got {A}")
    p = check_index(p)
    if math.isinf(p):
        return 1.0, 1.0
    n_pan = max(1, int(math.ceil(A * panels_per_unit)))
    x, w = leggauss(order)
    edges = np.linspace(-A / 2.0, A / 2.0, n_pan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    sq = nodes**2
    acc_r2, acc_w = sq, wts
    for _ in range(d - 1):
        acc_r2 = np.add.outer(acc_r2, sq).ravel()
        acc_w = np.multiply.outer(acc_w, wts).ravel()
    val = float(np.sum(acc_w * (1.0 + acc_r2) ** (p * s / 2.0)) ** (1.0 / p))
    return val, closed_form_mass(A, p, s, d)


def sequence_weight_mass(A, q, s, d=1):
    """``|| (1+|n|)^s ||_{l^q}`` over integer points ``n in Z^d`` with ``|n| <= A``."""
    if A < 0:
        raise DomainError(f"A must be nonnegative, got {A}")
    q = check_index(q, "q")
    r = int(math.floor(A))
    ns = np.arange(-r, r + 1)
    grids = np.meshgrid(*([ns.astype(float)] * d), indexing="ij")
    n_abs = np.sqrt(sum(g**2 for g in grids))
    vals = (1.0 + n_abs[n_abs <= A + 1e-12]) ** s
    if math.isinf(q):
        return float(np.max(vals))
    return float(np.sum(vals**q) ** (1.0 / q))
