"""End-to-end inflation sweeps and the standalone lemma checks."""

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._validation import ConfigurationError, DomainError, check_odd
from .lattice import CubeUnion, FreqLattice, GridFn, convolve, indicator
from .norms import closed_form_mass, fl_norm, mod_norm, weight_mass
from .picard import GAUSS, ModelParams, build_stack, truncated_solution
from .regimes import (
    ExponentCertificate,
    RegimePoint,
    certificate_critical,
    certificate_infinite_loss,
    certificate_ni,
)
from .resonance import classify_Ed, cone_check, sumset_distance_exact, sumset_distance_probe

CSV_HEADER = (
    "N,A,R,T,norm_psi0,norm_U1,norm_U3,norm_U3_lowfreq,tail_bound,norm_psiK,ratio,dom_u1,dom_tail"
)
COLLINEAR = "collinear"
RESONANT = "resonant"


def build_sigma(kind, N, d, alpha, A=None):
    """Cube centers for the collinear or resonant construction at scale ``N``.

    With ``A`` given, the resulting union must pass :func:`cone_check`.
    """
    if kind == COLLINEAR:
        e1 = np.zeros(d)
        e1[0] = 1.0
        centers = [N * e1, 2 * N * e1]
    elif kind == RESONANT:
        verdict = classify_Ed(d, alpha)
        if not verdict.member:
            raise DomainError(f"alpha={alpha} admits no angle-gated resonant triple in dimension {d}")
        w = verdict.witness
        if w.degenerate:
            raise DomainError("the witness triple has a zero leg")
        pts = [N * w.v1, 2 * N * w.v1, N * w.v2, N * w.v3]
        centers = []
        for p in pts:
            if not any(np.allclose(p, q, rtol=0, atol=1e-12) for q in centers):
                centers.append(p)
    else:
        raise ConfigurationError(f"unknown sigma kind {kind!r}")
    centers = [np.asarray(c, dtype=float) for c in centers]
    if A is not None:
        cone_check(CubeUnion(A, centers))
    return centers


@dataclass
class ExperimentConfig:
    point: RegimePoint
    sigma: str = COLLINEAR
    sweep: tuple = (8, 16, 32, 64)
    K: int = 7
    m: int = 4
    n_t: int = 32
    mu: int = 1
    scheme: str = None
    delta: object = None
    theta: object = None
    exponents: dict = None
    A0: float = 1.0
    R0: float = 1.0
    T0: float = 1.0
    dominance_factor: float = 2.0
    smallness_threshold: float = 1.0
    sigma_probe: tuple = ()
    seed: int = 0
    out: str = None
    allow_d2: bool = False
    rule: str = GAUSS

    def __post_init__(self):
        self.K = check_odd(self.K, "K")
        self.sweep = tuple(int(n) for n in self.sweep)
        if not self.sweep or any(b <= a for a, b in zip(self.sweep, self.sweep[1:])):
            raise ConfigurationError("the N sweep must be non-empty and strictly increasing")
        if self.m < 1 or int(self.m) != self.m:
            raise ConfigurationError("m must be a positive integer")
        if self.sigma not in (COLLINEAR, RESONANT):
            raise ConfigurationError(f"unknown sigma kind {self.sigma!r}")
        d = self.point.d
        if d >= 3:
            raise ConfigurationError("inflation runs are limited to d <= 2")
        if d == 2 and not self.allow_d2:
            raise ConfigurationError("d = 2 runs need allow_d2=True")
        if d == 2 and max(self.sweep) > 16:
            raise ConfigurationError("d = 2 runs are limited to N <= 16")
        if self.dominance_factor <= 0:
            raise ConfigurationError("dominance_factor must be positive")

    @classmethod
    def from_dict(cls, cfg):
        cfg = dict(cfg)
        pt = cfg.pop("point")
        point = RegimePoint(pt["d"], pt["gamma"], pt["alpha"], pt["index"], pt["s"], pt.get("space", "FL"))
        if "nt" in cfg:
            cfg["n_t"] = cfg.pop("nt")
        known = set(cls.__dataclass_fields__)
        extra = set(cfg) - known
        if extra:
            raise ConfigurationError(f"unknown config keys {sorted(extra)}")
        for key in ("sweep", "sigma_probe"):
            if key in cfg:
                cfg[key] = tuple(cfg[key])
        return cls(point=point, **cfg)


def certificate_for_config(config):
    """Exponent certificate (or explicit exponents) driving the scale choices."""
    if config.exponents is not None:
        e = config.exponents
        return ExponentCertificate("explicit", config.point, Fraction(str(e["a"])), Fraction(str(e["r"])),
                                   Fraction(str(e["eps"])), Fraction(str(e.get("shift", 0))))
    scheme = config.scheme or "theorem_ni"
    if scheme == "nicri_log":
        cert = certificate_critical(config.point)
    elif scheme in ("ilr0", "ilr2"):
        cert = certificate_infinite_loss(config.point, scheme, theta=config.theta)
    else:
        cert = certificate_ni(config.point, scheme, config.delta, config.theta)
    if not cert:
        raise ConfigurationError(f"no {scheme} certificate for this point: {cert.reason}")
    return cert


@dataclass
class Scales:
    N: int
    A: float
    R: float
    T: float
    h: float


def scales(config, cert, N):
    """``A``, ``R``, ``T`` and lattice spacing at scale ``N``.

    Collinear centers sit on lattice nodes: the spacing is snapped so that ``N/h``
    is an integer and ``A = m h``.
    """
    d = config.point.d
    a, r = float(cert.a), float(cert.r)
    alpha = float(config.point.alpha)
    if cert.scheme == "nicri_log":
        L = math.log(N)
        A_t = config.A0 * N ** (a / d) * L ** (-float(cert.a_log) / d)
        R = config.R0
        T = config.T0 * N ** (-alpha) * L ** (-float(cert.eps))
    else:
        A_t = config.A0 * N ** (a / d)
        R = config.R0 * N**r
        T = config.T0 * N ** (float(cert.shift) - alpha - float(cert.eps))
    h = A_t / config.m
    if config.sigma == COLLINEAR:
        h = N / max(1, round(N / h))
    A = config.m * h
    if A >= N:
        raise ConfigurationError(f"cube side {A:.3g} is not below N={N}")
    return Scales(N, A, R, T, h)


def precheck(config, cert):
    """Analytic smallness ``T a^(gamma-d) (R |Omega|)^2`` per ``N``, before any iterate is computed.

    ``R |Omega|`` is the FL^1 norm of the indicator data, so this is the quantity
    the truncated series needs below ``config.smallness_threshold``.
    """
    pt = config.point
    rows = []
    for N in config.sweep:
        sc = scales(config, cert, N)
        om = CubeUnion(sc.A, build_sigma(config.sigma, N, pt.d, float(pt.alpha), sc.A))
        q0 = sc.T * om.a_omega() ** (float(pt.gamma) - pt.d) * (sc.R * om.volume) ** 2
        rows.append({"N": N, "smallness": q0, "ok": q0 <= config.smallness_threshold})
    return rows


@dataclass
class InflationRecord:
    N: int
    A: float
    R: float
    T: float
    norm_psi0: float
    norm_U1: float
    norm_U3: float
    norm_U3_lowfreq: float
    tail_bound: float
    norm_psiK: float
    ratio: float
    dom_u1: bool
    dom_tail: bool
    tail_measured: float = math.nan
    tail_majorant_fl1: float = math.nan
    smallness: float = math.nan
    step: float = math.nan
    factor_u1: float = math.nan
    factor_tail: float = math.nan
    valid: bool = True
    sigma_u3: dict = field(default_factory=dict)
    sigma_psiK: dict = field(default_factory=dict)

    def csv_row(self):
        return [self.N, repr(self.A), repr(self.R), repr(self.T), repr(self.norm_psi0), repr(self.norm_U1),
                repr(self.norm_U3), repr(self.norm_U3_lowfreq), repr(self.tail_bound), repr(self.norm_psiK),
                repr(self.ratio), int(self.dom_u1), int(self.dom_tail)]


def _norm_fn(point):
    p = float(point.index)
    s = float(point.s)
    if point.space == "FL":
        return lambda f: fl_norm(f, p, s)
    return lambda f: mod_norm(f, p, s)


def restrict(f, side):
    """``f`` times the indicator of the half-open cube ``Q_side`` at the origin.

    Nodes are selected by coordinate, so ``side`` need not be a multiple of ``h``.
    """
    lat = f.lattice
    half = side / 2.0
    inside = np.ones(lat.shape, dtype=bool)
    for x in lat.coords:
        inside &= (x >= -half) & (x < half)
    return GridFn(lat, np.where(inside, f.values, 0))


def run_one(config, cert, N):
    """Single scale of the sweep."""
    pt = config.point
    d = pt.d
    sc = scales(config, cert, N)
    centers = build_sigma(config.sigma, N, d, float(pt.alpha), sc.A)
    omega = CubeUnion(sc.A, centers)
    if not omega.is_disjoint():
        raise ConfigurationError(f"cubes overlap at N={N}")
    lat = FreqLattice.covering(config.K * omega.extent(), sc.h, d)
    psi0 = indicator(omega, sc.R, lat)
    params = ModelParams(d, float(pt.gamma), float(pt.alpha), config.mu)
    stack = build_stack(psi0, params, sc.T, config.K, config.n_t, config.rule,
                        meta={"N": N, "A": sc.A, "R": sc.R})
    sol = truncated_solution(stack, enforce=False)
    norm = _norm_fn(pt)
    n0 = norm(psi0)
    nu = {k: norm(stack.U(k)) for k in range(1, config.K + 1, 2)}
    u3_low = norm(restrict(stack.U(3), sc.A))
    measured = sum(nu[k] for k in range(5, config.K + 1, 2))
    y = sol.step
    if config.K < 5:
        remainder = nu[3] * y / (1.0 - y) if y < 1 else math.inf
    else:
        remainder = nu[config.K] * y / (1.0 - y) if y < 1 else math.inf
    tail = measured + remainder
    nK = norm(sol.psi)
    fac = config.dominance_factor
    f_u1 = nu[3] / nu[1] if nu[1] else math.inf
    f_tail = nu[3] / tail if tail else math.inf
    valid = sol.smallness <= config.smallness_threshold and y < 1
    sig_u3, sig_psi = {}, {}
    p = float(pt.index)
    for sgm in config.sigma_probe:
        sig_u3[sgm] = fl_norm(restrict(stack.U(3), 1.0), p, sgm)
        sig_psi[sgm] = fl_norm(restrict(sol.psi, 1.0), p, sgm)
    return InflationRecord(
        N=N, A=sc.A, R=sc.R, T=sc.T, norm_psi0=n0, norm_U1=nu[1], norm_U3=nu.get(3, 0.0),
        norm_U3_lowfreq=u3_low, tail_bound=tail, norm_psiK=nK, ratio=nK / n0,
        dom_u1=bool(f_u1 >= fac), dom_tail=bool(f_tail >= fac),
        tail_measured=measured, tail_majorant_fl1=sol.tail_majorant, smallness=sol.smallness, step=y,
        factor_u1=f_u1, factor_tail=f_tail, valid=bool(valid), sigma_u3=sig_u3, sigma_psiK=sig_psi,
    )


def _threads(n):
    env = os.environ.get("NI_LAB_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n))


def _slope(ns, vals):
    x = np.log2(np.asarray(ns, dtype=float))
    y = np.log2(np.asarray(vals, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _monotone_from(vals, increasing):
    """Smallest index from which ``vals`` is strictly monotone to the end."""
    i = len(vals) - 1
    while i > 0 and ((vals[i] > vals[i - 1]) if increasing else (vals[i] < vals[i - 1])):
        i -= 1
    return i


@dataclass
class InflationRun:
    config: ExperimentConfig
    certificate: object
    records: list
    summary: dict

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        for rec in self.records:
            w.writerow(rec.csv_row())
        return buf.getvalue()


def summarize(records, cert, dominance_factor):
    ns = [r.N for r in records]
    ratios = [r.ratio for r in records]
    n0s = [r.norm_psi0 for r in records]
    out = {"N": ns}
    if len(records) >= 2:
        out["slope_ratio"] = _slope(ns, ratios)
        out["slope_psi0"] = _slope(ns, n0s)
        out["slope_U3"] = _slope(ns, [r.norm_U3 for r in records])
    ex = cert.exponents() if hasattr(cert, "exponents") else {}
    if ex:
        out["predicted_ratio_lower"] = float(ex["ratio_lower"])
        out["predicted_ratio_sharp"] = float(ex["ratio_sharp"])
        out["predicted_psi0"] = float(ex["psi0"])
        out["predicted_U3_sharp"] = float(ex["U3_sharp"])
        if "slope_ratio" in out:
            for key in ("lower", "sharp"):
                pred = out[f"predicted_ratio_{key}"]
                out[f"slope_rel_error_{key}"] = abs(out["slope_ratio"] - pred) / abs(pred) if pred else math.inf
    out["psi0_decreasing"] = all(b < a for a, b in zip(n0s, n0s[1:]))
    out["ratio_increasing"] = all(b > a for a, b in zip(ratios, ratios[1:]))
    i = max(_monotone_from(ratios, True), _monotone_from(n0s, False))
    out["N0"] = ns[i]
    both = [r.dom_u1 and r.dom_tail for r in records]
    j = len(both)
    while j > 0 and both[j - 1]:
        j -= 1
    out["dominance_from"] = ns[j] if j < len(ns) else None
    out["dominance_factor"] = dominance_factor
    out["measured_factor_u1"] = [r.factor_u1 for r in records]
    out["measured_factor_tail"] = [r.factor_tail for r in records]
    out["valid"] = [r.valid for r in records]
    probes = records[0].sigma_u3.keys() if records else ()
    if probes and len(records) >= 2:
        out["sigma_growth_U3"] = {str(s): _slope(ns, [r.sigma_u3[s] for r in records]) for s in probes}
        out["sigma_growth_psiK"] = {str(s): _slope(ns, [r.sigma_psiK[s] for r in records]) for s in probes}
    return out


def run_inflation(config):
    """Sweep ``N``, measure the norms and emit CSV and JSON when ``config.out`` is set."""
    cert = certificate_for_config(config)
    checked = precheck(config, cert)
    with ThreadPoolExecutor(max_workers=_threads(len(config.sweep))) as pool:
        records = list(pool.map(lambda n: run_one(config, cert, n), config.sweep))
    records.sort(key=lambda r: r.N)
    run = InflationRun(config, cert, records, summarize(records, cert, config.dominance_factor))
    run.summary["precheck"] = checked
    if config.out:
        stem = Path(config.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".csv").write_text(run.to_csv())
        payload = {
            "certificate": cert.to_dict(),
            "summary": run.summary,
            "records": [_jsonable(asdict(r)) for r in records],
        }
        stem.with_suffix(".json").write_text(json.dumps(payload, indent=2, default=str))
    return run


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            v = {str(kk): vv for kk, vv in v.items()}
        out[k] = v
    return out


# lemma checks ------------------------------------------------------------


def _pi_sq_lower():
    return Fraction(314159265, 10**8) ** 2


def _sqrt_lower(x, digits=12):
    scale = 10**digits
    num = x * scale * scale
    return Fraction(math.isqrt(num.numerator // num.denominator), scale)


def check_power_series(C=2, b1=1, kmax=30):
    """Cubic convolution recursion ``b_k = C sum_{k1+k2+k3=k} b_k1 b_k2 b_k3`` against ``b_1 C0^(k-1)``.

    ``C0 = (pi^2/2) sqrt(C) b_1`` is replaced by a rational lower bound, so passing
    the check in exact arithmetic proves the bound for the true constant.
    """
    C, b1 = Fraction(C), Fraction(b1)
    b = {1: b1}
    for k in range(2, kmax + 1):
        acc = Fraction(0)
        for k1 in range(1, k - 1):
            for k2 in range(1, k - k1):
                k3 = k - k1 - k2
                acc += b[k1] * b[k2] * b[k3]
        b[k] = C * acc
    c0_low = _pi_sq_lower() / 2 * _sqrt_lower(C) * b1
    ratios = {k: b[k] / (b1 * c0_low ** (k - 1)) for k in b}
    worst = max(ratios.values())
    return {"name": "power_series_bound", "passed": worst <= 1, "max_ratio": float(worst),
            "max_ratio_k_ge_2": float(max(v for k, v in ratios.items() if k >= 2)), "kmax": kmax}


def check_cube_convolution(d=1, A=2.0, m=8, shifts=None):
    """Two-sided bound for the convolution of two translated cube indicators.

    The peak value is ``A^d``.  Reports the smallest value of ``conv / A^d`` on ``eta1 + eta2 + Q_A``, the largest
    value overall, and whether the support stays inside ``eta1 + eta2 + Q_2A``.
    """
    if shifts is None:
        shifts = [(np.zeros(d), np.zeros(d)), (np.r_[3.0, np.zeros(d - 1)], np.r_[5.0, np.zeros(d - 1)])]
    h = A / m
    rows = []
    ok = True
    for e1, e2 in shifts:
        ext = np.max(np.abs(e1)) + np.max(np.abs(e2)) + 2 * A
        lat = FreqLattice.covering(ext, h, d)
        f = indicator(CubeUnion(A, [e1]), 1.0, lat)
        g = indicator(CubeUnion(A, [e2]), 1.0, lat)
        conv = convolve(f, g).values.real
        inner = np.zeros(lat.shape, dtype=bool)
        inner[lat.cube_slices(e1 + e2, A)] = True
        outer = np.zeros(lat.shape, dtype=bool)
        outer[lat.cube_slices(e1 + e2, 2 * A)] = True
        c_meas = float(conv[inner].min() / A**d)
        C_meas = float(conv.max() / A**d)
        leak = float(np.abs(conv[~outer]).max()) if np.any(~outer) else 0.0
        # half-open cubes: the discrete support is symmetric about eta1 + eta2 - h
        center = float(conv[lat.index_of(e1 + e2 - h)])
        row = {"eta1": e1.tolist(), "eta2": e2.tolist(), "c_d": c_meas, "C_d": C_meas, "leak": leak,
               "center": center}
        ok &= c_meas >= 2.0**-d - 1e-12 and C_meas <= 1 + 1e-12 and leak < 1e-9
        ok &= abs(center - A**d) < 1e-9
        rows.append(row)
    return {"name": "cube_convolution", "passed": bool(ok), "d": d, "A": A, "cases": rows}


def check_weight_mass(p=2.0, d=1, A_values=(4, 8, 16, 32, 64, 128, 256), spread=4.0):
    """Quadrature of the weight mass divided by its regime value, in all three regimes of ``s``."""
    crit = -d / p
    regimes = {"below": crit - 0.5, "critical": crit, "above": crit + 0.25}
    out = {}
    ok = True
    for name, s in regimes.items():
        ratios = []
        for A in A_values:
            q, closed = weight_mass(A, p, s, d)
            ratios.append(q / closed)
        lo, hi = min(ratios), max(ratios)
        out[name] = {"s": s, "min": lo, "max": hi}
        ok &= hi / lo <= spread
    return {"name": "weight_mass_regimes", "passed": bool(ok), "p": p, "d": d, "regimes": out}


def check_sumset(samples=100_000, seed=0, kmax=3):
    """Sums of up to ``kmax`` points of a cone-admissible union stay at least ``a(Omega)`` from 0."""
    cases = [
        ("collinear", CubeUnion(1.0, build_sigma(COLLINEAR, 8, 1, 2.0))),
        ("resonant", CubeUnion(1.0, build_sigma(RESONANT, 8, 2, 2.0, 1.0))),
    ]
    rows = []
    ok = True
    for name, om in cases:
        cone_check(om)
        a = om.a_omega()
        for k in range(1, kmax + 1):
            probe = sumset_distance_probe(om, k, samples, seed)
            exact = sumset_distance_exact(om, k)
            good = probe >= a * (1 - 1e-12) and probe >= exact * (1 - 1e-12)
            ok &= good
            rows.append({"case": name, "k": k, "a_omega": a, "probe": probe, "exact": exact, "passed": good})
    return {"name": "sumset_distance", "passed": bool(ok), "cases": rows}


@dataclass
class LemmaReport:
    checks: list

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)

    def to_dict(self):
        return {"passed": self.passed, "checks": self.checks}


def verify_lemma_suite(samples=100_000, seed=0):
    """Run every standalone check; see the individual ``check_*`` functions."""
    checks = [
        check_power_series(),
        check_cube_convolution(1),
        check_cube_convolution(2, A=2.0, m=4),
        check_weight_mass(2.0, 1),
        check_weight_mass(1.0, 1),
        check_sumset(samples, seed),
    ]
    return LemmaReport(checks)


__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "InflationRecord",
    "InflationRun",
    "LemmaReport",
    "build_sigma",
    "check_cube_convolution",
    "check_power_series",
    "check_sumset",
    "check_weight_mass",
    "closed_form_mass",
    "run_inflation",
    "scales",
    "verify_lemma_suite",
]
