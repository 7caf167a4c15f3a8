"""Critical indices, regime classification and exponent certificates.

Every inflation construction picks ``A = N^(a/d)``, ``R = N^r`` and
``T = N^(shift - alpha - eps)`` and needs a handful of strict inequalities between
powers of ``N``.  Certificates store the exponents and the margins of those
inequalities.  With rational inputs (ints, :class:`~fractions.Fraction` or decimal
strings) all arithmetic is exact; float inputs use an absolute margin of 1e-9.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Integral, Rational

from ._validation import DomainError
from .resonance import classify_Ed

NI = "NI"
NI_INFINITE_LOSS = "NI_infinite_loss"
OUTSIDE = "outside_known_region"

FLOAT_MARGIN = 1e-9
NEAR_BOUNDARY = 1e-6

SCHEMES = ("theorem_ni", "ni1_case1", "ni1_case2", "nicri_log", "ilr0", "ilr2")
NI_SCHEMES = SCHEMES[:4]
LOSS_SCHEMES = SCHEMES[4:]


def as_number(x):
    """Exact ``Fraction`` for ints, rationals and numeric strings; ``inf`` or float otherwise."""
    if isinstance(x, bool):
        raise DomainError("booleans are not numbers here")
    if isinstance(x, (Integral, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        t = x.strip().lower()
        if t in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            return Fraction(t)
        except ValueError:
            raise DomainError(f"not a number: {x!r}") from None
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return x
    if x.is_integer():
        return Fraction(int(x))
    return x


def _inv(p):
    return Fraction(0) if p == math.inf else (1 / p if isinstance(p, Fraction) else 1.0 / p)


def critical_fl(d, gamma, alpha, p):
    """Scaling index ``d(1 - 1/p) - (d - gamma + alpha)/2``."""
    d, gamma, alpha, p = (as_number(v) for v in (d, gamma, alpha, p))
    return d * (1 - _inv(p)) - (d - gamma + alpha) / 2


def critical_mod(d, gamma, alpha, q):
    """Modulation analogue: ``d/2`` replaces ``d(1 - 1/q)`` for ``q <= 2``."""
    d, gamma, alpha, q = (as_number(v) for v in (d, gamma, alpha, q))
    if q <= 2:
        return d / 2 - (d - gamma + alpha) / 2
    return d * (1 - _inv(q)) - (d - gamma + alpha) / 2


@dataclass(frozen=True)
class RegimePoint:
    d: int
    gamma: object
    alpha: object
    index: object
    s: object
    space: str = "FL"

    def __post_init__(self):
        if self.space not in ("FL", "MOD"):
            raise DomainError(f"space must be FL or MOD, got {self.space!r}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        for name in ("gamma", "alpha", "index", "s"):
            object.__setattr__(self, name, as_number(getattr(self, name)))
        if not 0 < self.gamma <= self.d:
            raise DomainError(f"gamma must lie in (0, d], got {self.gamma}")
        if not self.alpha > 0 or self.alpha == math.inf:
            raise DomainError(f"alpha must be positive and finite, got {self.alpha}")
        if not self.index >= 1:
            raise DomainError(f"index must lie in [1, inf], got {self.index}")
        if isinstance(self.s, float) and not math.isfinite(self.s):
            raise DomainError("s must be finite")

    @property
    def exact(self):
        vals = (self.gamma, self.alpha, self.s)
        return all(isinstance(v, Fraction) for v in vals) and (
            self.index == math.inf or isinstance(self.index, Fraction)
        )

    @property
    def X(self):
        """``d - gamma + alpha``."""
        return self.d - self.gamma + self.alpha

    @property
    def p_eff(self):
        """Lebesgue index driving the constructions: ``p``, or ``max(2, q)`` for modulation norms."""
        if self.space == "FL":
            return self.index
        return self.index if self.index >= 2 else Fraction(2)

    @property
    def inv(self):
        return _inv(self.p_eff)

    @property
    def mass_inv(self):
        """Index reciprocal of the weight mass on the low-frequency cube."""
        return _inv(self.index)

    @property
    def s_c(self):
        if self.space == "FL":
            return critical_fl(self.d, self.gamma, self.alpha, self.index)
        return critical_mod(self.d, self.gamma, self.alpha, self.index)

    def with_s(self, s):
        return replace(self, s=s)

    def to_dict(self):
        def out(v):
            if v == math.inf:
                return "inf"
            return str(v) if isinstance(v, Fraction) else v

        return {"d": self.d, "gamma": out(self.gamma), "alpha": out(self.alpha),
                "space": self.space, "index": out(self.index), "s": out(self.s)}


class _Cmp:
    """Strict and equality tests in exact or float mode."""

    def __init__(self, exact):
        self.exact = exact

    def pos(self, x):
        return x > 0 if self.exact else x > FLOAT_MARGIN

    def lt(self, a, b):
        return self.pos(b - a)

    def eq(self, a, b):
        if a == math.inf or b == math.inf:
            return a == b
        return a == b if self.exact else abs(a - b) <= FLOAT_MARGIN

    def le(self, a, b):
        return self.lt(a, b) or self.eq(a, b)

    def near(self, x):
        return (not self.exact) and abs(x) < NEAR_BOUNDARY


def _gate_ed(point):
    return classify_Ed(point.d, float(point.alpha)).member


def scheme_conditions(point):
    """Threshold conditions under which each construction scheme applies."""
    c = _Cmp(point.exact)
    d, gamma, alpha, s, X = point.d, point.gamma, point.alpha, point.s, point.X
    p, inv = point.p_eff, point.inv
    finite = p != math.inf
    return {
        "theorem_ni": c.lt(s, min(critical_fl(d, gamma, alpha, p), 0)),
        "ni1_case1": finite and c.lt(s, -d * inv) and c.lt(s, -X / 3),
        "ni1_case2": finite and p >= Fraction(3, 2) and c.lt(s, -d * inv) and c.lt(s, -X * inv / 2),
        "nicri_log": finite and c.eq(s, -d * inv) and c.le(alpha, d + gamma),
        "ilr0": c.lt(s, -X / 3),
        "ilr2": _gate_ed(point) and c.lt(s, -(X - 1) / 3),
    }


def _fl_statement(d, gamma, alpha, p, s, c):
    """Literal piecewise condition on ``s`` for the Fourier-Lebesgue inflation theorem."""
    inv = _inv(p)
    X = d - gamma + alpha
    s_c = d * (1 - inv) - X / 2
    t1 = 2 * d * (Fraction(1, 2) - inv) + gamma
    hits = []
    if c.le(alpha, t1) and c.lt(s, 0):
        hits.append("s<0")
    if c.le(t1, alpha) and c.le(alpha, gamma + d) and c.lt(s, s_c):
        hits.append("s<s_c")
    if c.lt(gamma + d, alpha) and c.lt(s, max(s_c, -X * min(Fraction(1, 3), inv / 2))):
        hits.append("s<max(s_c,-X*min(1/3,1/2p))")
    if p != math.inf and c.eq(alpha, gamma + d) and c.eq(s, s_c):
        hits.append("s=s_c at alpha=gamma+d")
    return hits


def _mod_statement(d, gamma, alpha, q, s, c):
    """Literal piecewise condition on ``s`` for the modulation inflation theorem."""
    inv = _inv(q)
    X = d - gamma + alpha
    m_c = critical_mod(d, gamma, alpha, q)
    t1 = 2 * d * max(Fraction(0), Fraction(1, 2) - inv) + gamma
    hits = []
    if c.le(alpha, t1) and c.lt(s, 0):
        hits.append("s<0")
    if c.le(t1, alpha) and c.le(alpha, gamma + d) and c.lt(s, m_c):
        hits.append("s<m_c")
    if c.lt(gamma + d, alpha) and c.lt(s, -X * min(Fraction(1, 4), inv / 2)):
        hits.append("s<-X*min(1/4,1/2q)")
    if q != math.inf and c.eq(alpha, gamma + d) and c.eq(s, m_c):
        hits.append("s=m_c at alpha=gamma+d")
    return hits


def _loss_statement(d, alpha, X, s, c):
    hits = []
    if c.lt(s, -X / 3):
        hits.append("s<-X/3")
    gated = (alpha == 1 and d == 1) or (alpha >= 1 and d >= 2)
    if gated and c.lt(s, -(X - 1) / 3):
        hits.append("s<-(X-1)/3")
    return hits


@dataclass(frozen=True)
class RegimeVerdict:
    point: RegimePoint
    verdict: str
    theorem: str
    branches: tuple
    schemes: dict
    certified: bool
    near_boundary: bool
    conditions: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "point": self.point.to_dict(),
            "verdict": self.verdict,
            "norm_inflation": self.verdict != OUTSIDE,
            "theorem": self.theorem,
            "branches": list(self.branches),
            "schemes": dict(self.schemes),
            "certified": self.certified,
            "near_boundary": self.near_boundary,
            "conditions": {k: list(v) for k, v in self.conditions.items()},
        }


def _near(point):
    c = _Cmp(point.exact)
    if point.exact:
        return False
    X, s, d, inv = point.X, point.s, point.d, point.inv
    lines = [point.s_c, 0, -d * inv, -X / 3, -(X - 1) / 3, -X * inv / 2]
    return any(c.near(s - v) for v in lines)


def _classify(point, ni_name, loss_name, statement):
    c = _Cmp(point.exact)
    ni_hits = statement(c)
    loss_hits = _loss_statement(point.d, point.alpha, point.X, point.s, c)
    schemes = scheme_conditions(point)
    conditions = {ni_name: tuple(ni_hits), loss_name: tuple(loss_hits)}
    loss_schemes = [k for k in LOSS_SCHEMES if schemes[k]]
    ni_schemes = [k for k in NI_SCHEMES if schemes[k]]
    if loss_hits or loss_schemes:
        verdict, name, hits, used = NI_INFINITE_LOSS, loss_name, loss_hits, loss_schemes
    elif ni_hits or ni_schemes:
        verdict, name, hits, used = NI, ni_name, ni_hits, ni_schemes
    else:
        return RegimeVerdict(point, OUTSIDE, "", (), schemes, False, _near(point), conditions)
    theorem = name + (":" + "+".join(used) if used else "")
    return RegimeVerdict(point, verdict, theorem, tuple(hits), schemes, bool(used), _near(point), conditions)


def classify_fl(point):
    """Strongest known conclusion for a Fourier-Lebesgue point."""
    if point.space != "FL":
        raise DomainError("classify_fl needs space='FL'")
    return _classify(
        point, "mt1", "mt2",
        lambda c: _fl_statement(point.d, point.gamma, point.alpha, point.index, point.s, c),
    )


def classify_mod(point):
    """Strongest known conclusion for a modulation point ``M^{2,q}_s``."""
    if point.space != "MOD":
        raise DomainError("classify_mod needs space='MOD'")
    return _classify(
        point, "mt3", "mt4",
        lambda c: _mod_statement(point.d, point.gamma, point.alpha, point.index, point.s, c),
    )


def classify(point):
    return classify_fl(point) if point.space == "FL" else classify_mod(point)


@dataclass(frozen=True)
class ExponentCertificate:
    scheme: str
    point: RegimePoint
    a: object
    r: object
    eps: object
    shift: object = 0
    theta: object = None
    delta: object = None
    a_log: object = None
    inequalities: tuple = ()
    near_boundary: bool = False
    extras: dict = field(default_factory=dict)

    def __bool__(self):
        return True

    @property
    def tau(self):
        """Exponent of ``N`` in the final time."""
        return self.shift - self.point.alpha - self.eps

    def exponents(self):
        """N-exponents of the measured quantities implied by the construction."""
        pt = self.point
        a, r, s, d = self.a, self.r, pt.s, pt.d
        base = self.tau + pt.gamma - d + 3 * r + 2 * a
        lower_mass = a * pt.mass_inv + s * a / d
        if a == 0 or s <= -d * pt.mass_inv:
            sharp_mass = 0
        else:
            sharp_mass = lower_mass
        psi0 = r + a * pt.inv + s
        return {
            "psi0": psi0,
            "U3_lower": base + lower_mass,
            "U3_sharp": base + sharp_mass,
            "ratio_lower": base + lower_mass - psi0,
            "ratio_sharp": base + sharp_mass - psi0,
            "series_step": self.tau + pt.gamma - d + 2 * r + 2 * a,
            "time": self.tau,
        }

    def to_dict(self):
        def out(v):
            if isinstance(v, tuple):
                return [out(x) for x in v]
            return str(v) if isinstance(v, Fraction) else v

        return {
            "scheme": self.scheme,
            "point": self.point.to_dict(),
            "a": out(self.a), "r": out(self.r), "eps": out(self.eps), "shift": out(self.shift),
            "theta": out(self.theta), "delta": out(self.delta), "a_log": out(self.a_log),
            "inequalities": [[n, out(m)] for n, m in self.inequalities],
            "near_boundary": self.near_boundary,
            "extras": {k: out(v) for k, v in self.extras.items()},
        }

    def summary(self):
        def f(v):
            return f"{float(v):.6g}"

        return f"{self.scheme}(a={f(self.a)};r={f(self.r)};eps={f(self.eps)})"


@dataclass(frozen=True)
class Infeasible:
    scheme: str
    reason: str
    thresholds: dict = field(default_factory=dict)

    def __bool__(self):
        return False

    def to_dict(self):
        return {"scheme": self.scheme, "infeasible": True, "reason": self.reason,
                "thresholds": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.thresholds.items()}}


def _lex_pos(m, c):
    """Positivity of a ``(power, log power)`` pair in lexicographic order."""
    if isinstance(m, tuple):
        power, logp = m
        return c.pos(power) or (c.eq(power, 0) and c.pos(logp))
    return c.pos(m)


def exponent_margins(scheme, point, a, r, eps, shift=0, a_log=None):
    """Margins of the strict inequalities a construction must satisfy; positive means satisfied.

    Power-law schemes return numbers; the logarithmic scheme returns
    ``(power, log power)`` pairs compared lexicographically.
    """
    d, gamma, alpha, s = point.d, point.gamma, point.alpha, point.s
    inv = point.inv
    if scheme == "nicri_log":
        if point.p_eff == math.inf:
            log_mass = 0
        else:
            log_mass = inv
        return [
            ("psi0_small", ((d - a) * inv, a_log * inv)),
            ("series_converges", (alpha - gamma + d - 2 * a, eps + 2 * a_log)),
            ("time_scale", (alpha - gamma + d, eps)),
            ("u3_grows", (-alpha + gamma - d + 2 * a, log_mass - eps - 2 * a_log)),
            ("short_time", (0, eps)),
            ("cube_grows", (a, 0)),
        ]
    tau = shift - alpha - eps
    if scheme == "theorem_ni":
        mass = a * inv + s * a / d
    else:
        mass = 0
    out = [
        ("psi0_small", -(r + a * inv + s)),
        ("series_converges", -(tau + gamma - d + 2 * r + 2 * a)),
        ("time_scale", -(tau + gamma - d)),
        ("u3_grows", tau + gamma - d + 3 * r + 2 * a + mass),
        ("short_time", eps),
    ]
    if scheme == "theorem_ni":
        out.append(("cube_below_d", d - a))
    if scheme == "ilr2":
        out.append(("eps_not_one", abs(eps - 1)))
    if scheme in ("ilr0", "ilr2", "ni1_case1", "ni1_case2"):
        out.append(("r_positive", r))
    return out


def _hypothesis_margin(scheme, point):
    """Slack of the threshold that the construction reduces to; positive when it applies."""
    d, s, X, inv = point.d, point.s, point.X, point.inv
    if scheme == "theorem_ni":
        return min(critical_fl(d, point.gamma, point.alpha, point.p_eff), 0) - s
    if scheme == "ni1_case1":
        return min(-d * inv, -X / 3) - s
    if scheme == "ni1_case2":
        return min(-d * inv, -X * inv / 2) - s
    if scheme == "ilr0":
        return -X / 3 - s
    if scheme == "ilr2":
        return -(X - 1) / 3 - s
    raise DomainError(f"no hypothesis margin for {scheme}")


def _num(x, exact):
    return Fraction(x) if exact else float(x)


def _pow2(j, exact):
    return Fraction(1, 2**j) if exact else 2.0**-j


def _default_grid(first, exact, lo_end):
    """Candidate parameter pairs: the stated default, a 20x20 grid, then a finer diagonal."""
    if first is not None:
        yield first
    for j in range(1, 21):
        for k in range(1, 21):
            dj = _pow2(j, exact)
            yield (1 - dj if not lo_end else dj), _pow2(k, exact)
    for j in range(21, 65):
        dj = _pow2(j, exact)
        yield (1 - dj if not lo_end else dj), dj


def _finish(scheme, point, a, r, lo, hi, c, shift=0, **kw):
    """Pick ``eps`` in ``(lo, hi)`` and assemble a certificate when every margin is positive."""
    if not c.lt(lo, hi):
        return None
    eps = (lo + hi) / 2
    if scheme == "ilr2" and c.eq(eps, 1):
        eps = lo + (hi - lo) / 3
    margins = exponent_margins(scheme, point, a, r, eps, shift)
    hyp = _hypothesis_margin(scheme, point)
    margins.append(("hypothesis", hyp))
    if not all(c.pos(m) for _, m in margins):
        return None
    near = any(c.near(m) for _, m in margins)
    return ExponentCertificate(scheme, point, a, r, eps, shift, inequalities=tuple(margins),
                               near_boundary=near, **kw)


def _try_theorem_ni(point, delta, theta, c):
    d, gamma, alpha, s, inv = point.d, point.gamma, point.alpha, point.s, point.inv
    a = delta * d
    r = -theta * a * (inv + s / d) - (1 - theta) * (a * inv + s)
    lo = max(0 * a, -alpha + gamma - d + 2 * r + 2 * a)
    hi = -alpha + gamma - d + 3 * r + 2 * a + a * inv + s * a / d
    return _finish("theorem_ni", point, a, r, lo, hi, c, theta=theta, delta=delta)


def _try_ni1_case1(point, delta, theta, c):
    d, gamma, alpha, s, inv = point.d, point.gamma, point.alpha, point.s, point.inv
    a = point.p_eff * (-s) * delta
    r = (-s) * (1 - delta) - theta
    lo = max(0 * a, -alpha + gamma - d + 2 * r + 2 * a)
    hi = -alpha + gamma - d + 3 * r + 2 * a
    return _finish("ni1_case1", point, a, r, lo, hi, c, theta=theta, delta=delta)


def _try_ni1_case2(point, delta, theta, c):
    d, gamma, alpha, s = point.d, point.gamma, point.alpha, point.s
    if not c.pos(-s - delta):
        return None
    a = point.p_eff * (-s - delta)
    r = theta * delta
    lo = max(0 * a, -alpha + gamma - d + 2 * r + 2 * a)
    hi = -alpha + gamma - d + 3 * r + 2 * a
    return _finish("ni1_case2", point, a, r, lo, hi, c, theta=theta, delta=delta)


def _try_ilr(point, theta, c, shift):
    d, gamma, alpha, s = point.d, point.gamma, point.alpha, point.s
    r = -s - theta
    a = 0 * r
    lo = max(0 * r, shift - alpha + gamma - d + 2 * r)
    hi = shift - alpha + gamma - d + 3 * r
    scheme = "ilr2" if shift else "ilr0"
    cert = _finish(scheme, point, a, r, lo, hi, c, shift=shift, theta=theta)
    if cert is not None and shift:
        lemma = "resonant_window" if c.lt(cert.eps, 1) else "short_time"
        cert = replace(cert, extras={"lower_bound": lemma})
    return cert


def _search(point, scheme, delta, theta):
    exact = point.exact
    c = _Cmp(exact)
    if not c.pos(_hypothesis_margin(scheme, point)):
        # every candidate lists this margin, so none can pass
        return None
    if delta is not None or theta is not None:
        th = _num(theta if theta is not None else Fraction(1, 1000), exact)
        if scheme in ("ilr0", "ilr2"):
            cands = [(None, th)]
        else:
            dflt = Fraction(999, 1000) if scheme == "theorem_ni" else Fraction(1, 1000)
            cands = [(_num(delta if delta is not None else dflt, exact), th)]
    elif scheme == "theorem_ni":
        cands = _default_grid((Fraction(999, 1000), Fraction(1, 1000)) if exact else (0.999, 0.001), exact, False)
    elif scheme in ("ni1_case1", "ni1_case2"):
        cands = _default_grid((Fraction(1, 1000), Fraction(1, 1000)) if exact else (0.001, 0.001), exact, True)
    else:
        cands = ((None, _pow2(j, exact)) for j in range(1, 65))
    for dl, th in cands:
        if scheme == "theorem_ni":
            cert = _try_theorem_ni(point, dl, th, c)
        elif scheme == "ni1_case1":
            cert = _try_ni1_case1(point, dl, th, c)
        elif scheme == "ni1_case2":
            cert = _try_ni1_case2(point, dl, th, c)
        else:
            cert = _try_ilr(point, th, c, 1 if scheme == "ilr2" else 0)
        if cert is not None:
            return cert
    return None


def certificate_ni(point, scheme="theorem_ni", delta=None, theta=None):
    """Exponent certificate for a power-law inflation scheme, or :class:`Infeasible`.

    ``theorem_ni`` uses ``a = delta d`` and ``r`` the convex combination (weight
    ``theta``) of its two admissible bounds; ``ni1_case1`` and ``ni1_case2`` use the
    variants for ``s < -d/p``.  Explicit ``delta`` and ``theta`` skip the search.
    """
    if scheme not in ("theorem_ni", "ni1_case1", "ni1_case2"):
        raise DomainError(f"certificate_ni does not handle scheme {scheme!r}")
    if not point.s < 0:
        return Infeasible(scheme, "the construction needs s < 0")
    if scheme != "theorem_ni" and point.p_eff == math.inf:
        return Infeasible(scheme, "the s < -d/p schemes need a finite index")
    if scheme == "ni1_case2" and point.p_eff < Fraction(3, 2):
        return Infeasible(scheme, "needs p >= 3/2")
    cert = _search(point, scheme, delta, theta)
    if cert is None:
        return Infeasible(scheme, "no admissible (delta, theta) found",
                          {"hypothesis": _hypothesis_margin(scheme, point)})
    return cert


def certificate_critical(point):
    """Logarithmic certificate at ``s = -d/p`` with ``a = (alpha + d - gamma)/2``."""
    c = _Cmp(point.exact)
    d, inv = point.d, point.inv
    if point.p_eff == math.inf:
        return Infeasible("nicri_log", "at p = inf the datum norm R is constant, so it cannot tend to 0")
    if not c.eq(point.s, -d * inv):
        return Infeasible("nicri_log", "needs s = -d/p", {"s_required": -d * inv})
    a = point.X / 2
    a_log = inv / 8
    eps = inv / 4
    margins = exponent_margins("nicri_log", point, a, 0 * a, eps, a_log=a_log)
    if not all(_lex_pos(m, c) for _, m in margins):
        return Infeasible("nicri_log", "a = (alpha + d - gamma)/2 exceeds d", {"a": a, "d": d})
    return ExponentCertificate("nicri_log", point, a, 0 * a, eps, a_log=a_log, inequalities=tuple(margins))


def certificate_infinite_loss(point, scheme=None, theta=None):
    """Certificate for a fixed unit cube (``A = 1``): ``ilr0`` or the resonance-gated ``ilr2``."""
    order = (scheme,) if scheme else ("ilr0", "ilr2")
    X = point.X
    thresholds = {"ilr0": -X / 3, "ilr2": -(X - 1) / 3}
    reasons = []
    for sch in order:
        if sch not in LOSS_SCHEMES:
            raise DomainError(f"unknown infinite-loss scheme {sch!r}")
        if sch == "ilr2" and not _gate_ed(point):
            reasons.append("alpha is not in the angle-gated resonant set")
            continue
        cert = _search(point, sch, None, theta)
        if cert is not None:
            return cert
        reasons.append(f"{sch}: s not below {thresholds[sch]}")
    return Infeasible(scheme or "ilr0|ilr2", "; ".join(reasons), thresholds)


def certificate_for(point, scheme):
    if scheme in ("theorem_ni", "ni1_case1", "ni1_case2"):
        return certificate_ni(point, scheme)
    if scheme == "nicri_log":
        return certificate_critical(point)
    return certificate_infinite_loss(point, scheme)


def verify_certificate(cert):
    """Recompute every margin from the stored exponents; returns ``(ok, margins)``."""
    c = _Cmp(cert.point.exact)
    margins = exponent_margins(cert.scheme, cert.point, cert.a, cert.r, cert.eps, cert.shift, cert.a_log)
    if cert.scheme != "nicri_log":
        margins.append(("hypothesis", _hypothesis_margin(cert.scheme, cert.point)))
    ok = all(_lex_pos(m, c) for _, m in margins)
    if cert.scheme == "ilr2":
        ok = ok and _gate_ed(cert.point)
    if cert.scheme == "theorem_ni":
        ok = ok and c.pos(-cert.point.s)
    return ok, margins


def breakpoints(d, gamma, index, space="FL"):
    """Closed-form lines of the (alpha, s) region pictures for fixed ``d, gamma, index``."""
    d, gamma, index = (as_number(v) for v in (d, gamma, index))
    inv = _inv(index)
    if space == "FL":
        first = 2 * d * (Fraction(1, 2) - inv) + gamma
        upper = inv / 2
        third = "s = max(s_c, -(d-gamma+alpha) min(1/3, 1/(2p)))"
    else:
        first = 2 * d * max(Fraction(0), Fraction(1, 2) - inv) + gamma
        upper = inv / 2
        third = "s = -(d-gamma+alpha) min(1/4, 1/(2q))"
    return {
        "alpha_first": first,
        "alpha_second": gamma + d,
        "s_minus_d_over_index": -d * inv,
        "corner": (gamma + d, -d * inv),
        "corner_included": index != math.inf,
        "critical_line": "s = s_c(alpha)",
        "third_branch": third,
        "third_branch_factor": min(Fraction(1, 3) if space == "FL" else Fraction(1, 4), upper),
        "loss_line": "s = -(d-gamma+alpha)/3",
        "loss_line_gated": "s = -(d-gamma+alpha-1)/3",
    }


@dataclass
class RegionGrid:
    rows: list
    breakpoints: dict

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "s", "verdict", "theorem", "cert"])
        for row in self.rows:
            w.writerow([row["alpha"], row["s"], row["verdict"], row["theorem"], row["cert"]])
        return buf.getvalue()


def region_grid(alphas, ss, d, gamma, index, space="FL", certify=True):
    """Classify every ``(alpha, s)`` node and attach a certificate summary."""
    rows = []
    for alpha in alphas:
        for s in ss:
            pt = RegimePoint(d, gamma, alpha, index, s, space)
            v = classify(pt)
            cert = ""
            if certify and v.certified:
                for sch in (LOSS_SCHEMES if v.verdict == NI_INFINITE_LOSS else NI_SCHEMES):
                    if v.schemes[sch]:
                        got = certificate_for(pt, sch)
                        if got:
                            cert = got.summary()
                            break
            rows.append({"alpha": _fmt(pt.alpha), "s": _fmt(pt.s), "verdict": v.verdict,
                         "theorem": v.theorem, "cert": cert})
    return RegionGrid(rows, breakpoints(d, gamma, index, space))


def _fmt(v):
    return str(v) if isinstance(v, Fraction) else repr(float(v))
