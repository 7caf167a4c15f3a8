"""Resonant frequency triples, the angle-gated exponent set, and cone geometry of cube unions.

A triple ``(v1, v2, v3)`` is resonant for dispersion order ``alpha`` when
``v1 + v2 = v3`` and ``|v1|^alpha + |v2|^alpha = |v3|^alpha``.  An exponent
belongs to the gated set for dimension ``d`` when some resonant triple in
``R^d`` also has ``2 v1.v2 > -|v1||v2|`` (first two legs at angle below 2pi/3).
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import DomainError, as_rng

RESIDUAL_RTOL = 1e-10


class ResonanceRejected(DomainError):
    """No resonant triple exists for the requested parameters."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ConeCheckError(DomainError):
    """The cube union does not fit in a cone of half-angle at most pi/3."""

    def __init__(self, message, vertex, angle):
        super().__init__(message)
        self.vertex = vertex
        self.angle = angle


def _norm(v):
    return float(np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class ResonantTriple:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    alpha: float
    theta: float = None
    sign: int = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.v1.size

    @property
    def residual(self):
        """``|v1|^alpha + |v2|^alpha - |v3|^alpha``."""
        a = self.alpha
        return _norm(self.v1) ** a + _norm(self.v2) ** a - _norm(self.v3) ** a

    @property
    def relative_residual(self):
        scale = _norm(self.v3) ** self.alpha
        return abs(self.residual) / scale if scale > 0 else abs(self.residual)

    @property
    def degenerate(self):
        return any(_norm(v) == 0.0 for v in (self.v1, self.v2, self.v3))

    @property
    def margin(self):
        return angle_margin(self.v1, self.v2)

    def scaled(self, N):
        return ResonantTriple(N * self.v1, N * self.v2, N * self.v3, self.alpha, self.theta, self.sign,
                              dict(self.diagnostics))

    def verify(self, rtol=RESIDUAL_RTOL):
        """Both defining identities: exact vector sum and the alpha-power identity."""
        return bool(np.array_equal(self.v1 + self.v2, self.v3)) and self.relative_residual <= rtol

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "v1": self.v1.tolist(),
            "v2": self.v2.tolist(),
            "v3": self.v3.tolist(),
            "margin": self.margin,
            "residual": self.residual,
            "degenerate": self.degenerate,
        }


def _triple(v1, v2, alpha, **kw):
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return ResonantTriple(v1, v2, v1 + v2, float(alpha), **kw)


def line_residual(alpha, a_param):
    """``|a|^alpha + |1-a|^alpha - 1`` for the one-dimensional split ``(a, 1-a, 1)``."""
    return abs(a_param) ** alpha + abs(1.0 - a_param) ** alpha - 1.0


def resonant_1d(alpha, a_param, N=1.0):
    """Resonant triple ``(aN, (1-a)N, N)`` on the line.

    Every ``a`` in ``[0, 1]`` works when ``alpha = 1``; otherwise only the endpoints
    do and other values raise :class:`ResonanceRejected` carrying the residual.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= a_param <= 1.0:
        raise ResonanceRejected(f"a={a_param} outside [0, 1]", line_residual(alpha, a_param))
    if alpha != 1 and a_param not in (0.0, 1.0):
        res = line_residual(alpha, a_param)
        raise ResonanceRejected(f"alpha={alpha} admits only a in {{0, 1}}; residual {res:.3g}", res)
    return _triple([a_param * N], [(1.0 - a_param) * N], alpha)


def resonant_family(d, alpha, theta, sign=1, N=1.0):
    """Planar resonant triple with ``|v3| = N`` parametrised by ``theta in [0, pi/2)``.

    ``v1 = (c, 0)`` with ``c = cos(theta)^(2/alpha)``; ``v3`` sits at angle ``r`` where
    ``cos r = (1 + c^2 - s^2) / (2c)`` and ``s = sin(theta)^(2/alpha)``, so that
    ``|v1|^alpha = cos^2 theta`` and ``|v2|^alpha = sin^2 theta``.  The remaining
    coordinates are zero.  ``diagnostics`` reports the admissibility slacks:
    ``cos r <= 1`` (equivalently ``c + s >= 1``, which is ``alpha >= 1``) and
    ``cos r >= -1`` (equivalently ``s <= 1 + c``).
    """
    if int(d) != d or d < 2:
        raise DomainError(f"the planar family needs d >= 2, got {d}")
    if alpha < 1:
        raise DomainError(f"alpha must be >= 1 for the planar family, got {alpha}")
    if not 0.0 <= theta < math.pi / 2:
        raise DomainError(f"theta must lie in [0, pi/2), got {theta}")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    c = math.cos(theta) ** (2.0 / alpha)
    s = math.sin(theta) ** (2.0 / alpha)
    diag = {
        "cos_r_le_1": 2.0 * c - (1.0 + c * c - s * s),
        "alpha_ge_1": c + s - 1.0,
        "sin_le_one_plus_cos": 1.0 + c - s,
    }
    cos_r = (1.0 + c * c - s * s) / (2.0 * c)
    rad = 2.0 * (c**2 + s**2) - (c**2 - s**2) ** 2 - 1.0
    if rad < 0:
        if rad < -1e-12:
            raise ResonanceRejected(f"negative radicand {rad:.3g}", rad)
        rad = 0.0
    sin_r = sign * math.sqrt(rad) / (2.0 * c)
    v1 = np.zeros(d)
    v2 = np.zeros(d)
    v1[0] = c
    v2[0] = cos_r - c
    v2[1] = sin_r
    tri = _triple(N * v1, N * v2, alpha, theta=float(theta), sign=sign, diagnostics=diag)
    if tri.relative_residual > RESIDUAL_RTOL:
        raise ResonanceRejected(f"residual {tri.residual:.3g} above tolerance", tri.residual)
    return tri


def angle_margin(v1, v2):
    """``2 v1.v2 + |v1||v2|``; positive when the legs meet at an angle below 2pi/3."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return float(2.0 * np.dot(v1, v2) + _norm(v1) * _norm(v2))


@dataclass(frozen=True, eq=False)
class EdVerdict:
    d: int
    alpha: float
    member: bool
    witness: ResonantTriple = None
    margin: float = None
    reason: str = ""
    certificate: dict = field(default_factory=dict)


def _line_certificate(alpha, n=1000):
    """Residual signs of the interior splits on an ``n``-point grid."""
    a = (np.arange(n) + 0.5) / n
    res = a**alpha + (1.0 - a) ** alpha - 1.0
    return {
        "grid_points": n,
        "max_residual": float(res.max()),
        "min_residual": float(res.min()),
        "strictly_negative": bool(np.all(res < 0)),
        "strictly_positive": bool(np.all(res > 0)),
    }


def classify_Ed(d, alpha):
    """Decide whether ``alpha`` admits an angle-gated resonant triple in ``R^d``."""
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    d = int(d)
    if alpha < 1:
        cert = _line_certificate(alpha) if d == 1 else {}
        return EdVerdict(d, alpha, False, reason="alpha < 1: |v1|+|v2| would exceed itself", certificate=cert)
    if d == 1:
        if alpha == 1:
            w = resonant_1d(1.0, 0.5, 2.0)
            return EdVerdict(d, alpha, True, w, w.margin, "split (1, 1, 2)")
        cert = _line_certificate(alpha)
        cert["endpoint_margin"] = 0.0
        return EdVerdict(d, alpha, False,
                         reason="only the degenerate splits a in {0, 1} are resonant and their margin is 0",
                         certificate=cert)
    w = resonant_family(d, alpha, math.pi / 4)
    return EdVerdict(d, alpha, True, w, w.margin, "planar family at theta = pi/4")


@dataclass(frozen=True)
class Cone:
    axis: tuple
    half_angle: float
    a_omega: float

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        n = _norm(x)
        if n == 0:
            return True
        return float(np.dot(x, self.axis)) / n >= math.cos(self.half_angle) - tol


def _axis_candidates(dirs, mean):
    yield mean
    for i, j in itertools.combinations(range(len(dirs)), 2):
        b = dirs[i] + dirs[j]
        n = _norm(b)
        if n > 0:
            yield b / n


def cone_check(omega):
    """Narrowest cone around the origin holding every cube; its half-angle must be at most pi/3.

    The axis is the best of the mean center direction and the bisectors of every
    pair of vertex directions, which is the minimal cone in the plane.
    """
    a = omega.a_omega()
    if not a > 0:
        raise DomainError("the cube union touches the origin")
    verts = omega.vertices()
    dirs = verts / np.linalg.norm(verts, axis=1)[:, None]
    mean = dirs.mean(axis=0)
    if _norm(mean) == 0:
        raise ConeCheckError("the vertex directions average to the origin", verts[0], math.pi)
    best_axis, best_angles = None, None
    for axis in _axis_candidates(dirs, mean / _norm(mean)):
        angles = np.arccos(np.clip(dirs @ axis, -1.0, 1.0))
        if best_angles is None or angles.max() < best_angles.max():
            best_axis, best_angles = axis, angles
    worst = int(np.argmax(best_angles))
    if best_angles[worst] > math.pi / 3 + 1e-12:
        raise ConeCheckError(
            f"vertex {verts[worst].tolist()} sits at angle {best_angles[worst]:.4f} > pi/3",
            verts[worst], float(best_angles[worst]),
        )
    return Cone(tuple(best_axis.tolist()), float(best_angles[worst]), a)


def _nearest_points(omega):
    half = omega.A / 2.0
    return np.clip(0.0, omega.points - half, omega.points + half)


def sumset_distance_exact(omega, k):
    """Distance from the origin to the closure of the k-fold sumset of ``omega``."""
    pts = omega.points
    best = math.inf
    for combo in itertools.combinations_with_replacement(range(len(pts)), k):
        center = pts[list(combo)].sum(axis=0)
        gaps = np.maximum(np.abs(center) - k * omega.A / 2.0, 0.0)
        best = min(best, _norm(gaps))
    return best


def sumset_distance_probe(omega, k, samples=100_000, seed=0):
    """Smallest ``|xi_1 + ... + xi_k|`` over random draws from ``omega``.

    The candidate set also includes every k-fold sum of the points of each cube
    nearest to the origin, so ``k = 1`` returns the distance of the union itself.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    rng = as_rng(seed)
    pts = omega.points
    d = omega.d
    best = math.inf
    chunk = 20_000
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        idx = rng.integers(0, len(pts), size=(n, k))
        offs = rng.uniform(-omega.A / 2.0, omega.A / 2.0, size=(n, k, d))
        sums = (pts[idx] + offs).sum(axis=1)
        best = min(best, float(np.min(np.linalg.norm(sums, axis=1))))
        done += n
    near = _nearest_points(omega)
    for combo in itertools.combinations_with_replacement(range(len(near)), k):
        best = min(best, _norm(near[list(combo)].sum(axis=0)))
    return best
