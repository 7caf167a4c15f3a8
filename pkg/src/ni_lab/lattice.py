"""Centered frequency lattices, grid functions and lattice convolution.

All objects live on the Fourier side.  The forward transform convention is
``F f(w) = int f(t) exp(-2 pi i t.w) dt`` so the free propagator acts as the
multiplier ``exp(i (2 pi)^alpha t |xi|^alpha)``.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft as sfft
from scipy import signal

from ._validation import (
    ConfigurationError,
    DomainError,
    LatticeRangeError,
    check_positive,
    check_same_lattice,
)

_TOL = 1e-9


def c_alpha(alpha):
    """Symbol constant of the fractional Laplacian under the 2 pi convention."""
    return (2.0 * math.pi) ** alpha


@dataclass(frozen=True)
class FreqLattice:
    """Nodes ``h*j`` with ``|j| <= (M-1)/2`` on each of ``d`` axes."""

    d: int
    h: float
    M: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.d!r}")
        check_positive(self.h, "h")
        if int(self.M) != self.M or self.M < 1 or self.M % 2 == 0:
            raise ConfigurationError(f"M must be an odd positive integer, got {self.M!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def covering(cls, half_width, h, d):
        """Smallest lattice of spacing ``h`` whose box contains ``[-half_width, half_width]^d``."""
        c = int(math.ceil(half_width / h - _TOL)) + 1
        return cls(d=d, h=h, M=2 * c + 1)

    @property
    def c(self):
        return (self.M - 1) // 2

    @property
    def shape(self):
        return (self.M,) * self.d

    @property
    def size(self):
        return self.M**self.d

    @property
    def cell(self):
        """Quadrature weight ``h^d`` attached to every node."""
        return self.h**self.d

    @property
    def half_width(self):
        return self.M * self.h / 2.0

    @cached_property
    def axis(self):
        return self.h * np.arange(-self.c, self.c + 1, dtype=float)

    @cached_property
    def coords(self):
        """Array of shape ``(d, M, ..., M)`` holding node coordinates."""
        grids = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        out = np.stack(grids)
        out.setflags(write=False)
        return out

    @cached_property
    def radius(self):
        r = np.sqrt(np.sum(self.coords**2, axis=0))
        r.setflags(write=False)
        return r

    def index_of(self, point):
        """Array index of the node nearest to ``point``."""
        j = np.rint(np.asarray(point, dtype=float) / self.h).astype(int)
        if np.any(np.abs(j) > self.c):
            raise LatticeRangeError(f"point {point} lies outside the lattice box")
        return tuple(j + self.c)

    def cube_slices(self, center, side):
        """Index slices of the nodes inside the half-open cube ``center + [-side/2, side/2)^d``.

        Every half-open interval of length ``m*h`` holds exactly ``m`` nodes, so the
        count is exact even when the cube is not aligned with the lattice.
        """
        m = side / self.h
        m_int = int(round(m))
        if m_int < 1 or abs(m - m_int) > _TOL * max(1.0, m):
            raise ConfigurationError(f"spacing h={self.h} does not divide cube side A={side}")
        center = np.asarray(center, dtype=float).reshape(-1)
        if center.shape != (self.d,):
            raise ConfigurationError(f"center {center} is not a point of R^{self.d}")
        slices = []
        hw = self.half_width
        for x in center:
            lo, hi = x - side / 2.0, x + side / 2.0
            if lo < -hw - _TOL * self.h or hi > hw + _TOL * self.h:
                raise LatticeRangeError(f"cube [{lo}, {hi}) leaves the lattice box [{-hw}, {hw})")
            first = math.ceil(lo / self.h - _TOL)
            start = first + self.c
            if start < 0 or start + m_int > self.M:
                raise LatticeRangeError(f"cube [{lo}, {hi}) leaves the lattice box")
            slices.append(slice(start, start + m_int))
        return tuple(slices)


@dataclass(frozen=True, eq=False)
class GridFn:
    """Complex Fourier-side density sampled on a :class:`FreqLattice`."""

    lattice: FreqLattice
    values: np.ndarray = field(repr=False)
    semantics: str = "fourier_density"

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.size == self.lattice.size and v.shape != self.lattice.shape:
            v = v.reshape(self.lattice.shape)
        if v.shape != self.lattice.shape:
            raise ConfigurationError(f"values of shape {v.shape} do not match lattice shape {self.lattice.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros(lattice.shape, dtype=complex))

    def _other(self, other):
        if isinstance(other, GridFn):
            check_same_lattice(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFn(self.lattice, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFn(self.lattice, self.values - self._other(other))

    def __mul__(self, other):
        return GridFn(self.lattice, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFn(self.lattice, -self.values)

    def __abs__(self):
        return np.abs(self.values)

    def max_abs(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(frozen=True)
class CubeUnion:
    """Union of half-open cubes ``eta + [-A/2, A/2)^d`` over the centers ``eta``."""

    A: float
    centers: tuple

    def __post_init__(self):
        check_positive(self.A, "A")
        pts = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigurationError("a cube union needs at least one center")
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "centers", tuple(tuple(float(x) for x in row) for row in pts))

    @property
    def points(self):
        return np.asarray(self.centers, dtype=float)

    @property
    def d(self):
        return len(self.centers[0])

    @property
    def volume(self):
        return len(self.centers) * self.A**self.d

    def a_omega(self):
        """Exact distance from the origin to the (closed) union of cubes."""
        gaps = np.maximum(np.abs(self.points) - self.A / 2.0, 0.0)
        return float(np.min(np.sqrt(np.sum(gaps**2, axis=1))))

    def vertices(self):
        """All ``2^d`` vertices of every cube, shape ``(n_cubes * 2^d, d)``."""
        corners = np.array(np.meshgrid(*([[-0.5, 0.5]] * self.d), indexing="ij")).reshape(self.d, -1).T
        return (self.points[:, None, :] + self.A * corners[None, :, :]).reshape(-1, self.d)

    def extent(self):
        """Largest sup-norm coordinate reached by the closed union."""
        return float(np.max(np.abs(self.points)) + self.A / 2.0)

    def is_disjoint(self):
        pts = self.points
        diff = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
        np.fill_diagonal(diff, np.inf)
        return bool(np.all(diff >= self.A - _TOL))

    def mask(self, lattice):
        """Boolean mask of lattice nodes inside the union."""
        if lattice.d != self.d:
            raise ConfigurationError("cube union and lattice have different dimensions")
        out = np.zeros(lattice.shape, dtype=bool)
        for eta in self.centers:
            out[lattice.cube_slices(eta, self.A)] = True
        return out

    def labels(self, lattice):
        """Integer array: index of the cube containing each node, or -1."""
        out = np.full(lattice.shape, -1, dtype=int)
        for i, eta in enumerate(self.centers):
            sl = lattice.cube_slices(eta, self.A)
            if np.any(out[sl] >= 0):
                raise ConfigurationError("cubes overlap on the lattice")
            out[sl] = i
        return out


def indicator(omega, R, lattice):
    """Grid function equal to ``R`` on the nodes of ``omega`` and 0 elsewhere."""
    check_positive(R, "R")
    return GridFn(lattice, R * omega.mask(lattice).astype(complex))


def convolve_values(lattice, a, b, method="fft"):
    """Array-level kernel of :func:`convolve` for callers that manage their own buffers."""
    c, M = lattice.c, lattice.M
    keep = tuple(slice(c, c + M) for _ in range(lattice.d))
    if method == "fft":
        # A wrapped term at index k lands on k - n; with n > 3c none reaches the kept window [c, 3c].
        n = sfft.next_fast_len(3 * c + 1)
        shape = (n,) * lattice.d
        full = sfft.ifftn(sfft.fftn(a, shape) * sfft.fftn(b, shape))
    elif method == "direct":
        full = signal.convolve(a, b, mode="full", method="direct")
    else:
        raise ConfigurationError(f"unknown convolution method {method!r}")
    return lattice.cell * full[keep]


def convolve(f, g, method="fft"):
    """Lattice convolution ``h^d sum_eta f(eta) g(xi - eta)`` restricted to the box.

    ``method="fft"`` zero-pads every axis far enough that no wrapped term can land in
    the retained window; ``method="direct"`` sums products explicitly and is exact
    wherever the true result vanishes.
    """
    lat = check_same_lattice(f, g)
    return GridFn(lat, convolve_values(lat, f.values, g.values, method))


def conj_reflect(f):
    """``conj(f(-xi))``: the Fourier transform of the complex conjugate."""
    flip = (slice(None, None, -1),) * f.lattice.d
    return GridFn(f.lattice, np.conj(f.values[flip]))


def _origin_cell_average(h, beta, d, order=12):
    """Average of ``|x|^beta`` over the cell ``[-h/2, h/2)^d`` for ``-d < beta < 0``.

    The cell splits into ``2d`` pyramids with apex at the origin; for a homogeneous
    integrand each pyramid integral reduces to a smooth integral over its base face.
    """
    half = h / 2.0
    if d == 1:
        face = half**beta
    else:
        x, w = leggauss(order)
        pts = np.meshgrid(*([half * x] * (d - 1)), indexing="ij")
        wts = np.prod(np.meshgrid(*([half * w] * (d - 1)), indexing="ij"), axis=0)
        r2 = half**2 + sum(p**2 for p in pts)
        face = float(np.sum(wts * r2 ** (beta / 2.0)))
    integral = 2 * d * half / (beta + d) * face
    return integral / h**d


@lru_cache(maxsize=32)
def _riesz_values(lattice, gamma):
    d = lattice.d
    if gamma == d:
        return np.ones(lattice.shape)
    beta = gamma - d
    r = lattice.radius
    with np.errstate(divide="ignore"):
        vals = np.where(r > 0, r, 1.0) ** beta
    vals[(lattice.c,) * d] = _origin_cell_average(lattice.h, beta, d)
    vals.setflags(write=False)
    return vals


def riesz_multiplier(lattice, gamma, d=None):
    """Symbol ``|xi|^(gamma - d)`` of the Riesz potential, cell-averaged at the origin."""
    if d is not None and d != lattice.d:
        raise ConfigurationError(f"d={d} does not match lattice dimension {lattice.d}")
    if not 0 < gamma <= lattice.d:
        raise DomainError(f"gamma must lie in (0, {lattice.d}], got {gamma}")
    return GridFn(lattice, _riesz_values(lattice, float(gamma)))


def fractional_phase(lattice, alpha, t):
    """Propagator multiplier ``exp(i c_alpha t |xi|^alpha)``."""
    check_positive(alpha, "alpha")
    return GridFn(lattice, np.exp(1j * c_alpha(alpha) * t * lattice.radius**alpha))


def write_gridfn(f, stem):
    """Write ``stem.json`` (header d, h, M) and ``stem.csv`` (index vector, re, im) for nonzero nodes."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    lat = f.lattice
    stem.with_suffix(".json").write_text(json.dumps({"d": lat.d, "h": lat.h, "M": lat.M}))
    idx = np.argwhere(f.values != 0)
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"j{i + 1}" for i in range(lat.d)] + ["re", "im"])
        for row in idx:
            v = f.values[tuple(row)]
            w.writerow([int(j) - lat.c for j in row] + [repr(float(v.real)), repr(float(v.imag))])


def read_gridfn(stem):
    stem = Path(stem)
    head = json.loads(stem.with_suffix(".json").read_text())
    lat = FreqLattice(d=head["d"], h=head["h"], M=head["M"])
    vals = np.zeros(lat.shape, dtype=complex)
    with open(stem.with_suffix(".csv"), newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for row in rows:
            j = tuple(int(x) + lat.c for x in row[: lat.d])
            vals[j] = complex(float(row[lat.d]), float(row[lat.d + 1]))
    return GridFn(lat, vals)
