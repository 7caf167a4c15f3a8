"""Error types and small argument checks shared across the package."""

import math
from fractions import Fraction
from numbers import Real

import numpy as np


class ConfigurationError(ValueError):
    """Inputs are individually valid but cannot be combined."""


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class LatticeRangeError(ValueError):
    """A requested object does not fit inside the lattice box."""


class SmallnessError(RuntimeError):
    """The Duhamel series is not certified convergent for the given data."""

    def __init__(self, message, quantity, threshold):
        super().__init__(message)
        self.quantity = quantity
        self.threshold = threshold


class OracleBudgetError(RuntimeError):
    """A brute-force oracle was asked to do more work than its budget allows."""


def check_index(p, name="p"):
    """Return a Lebesgue index as float, accepting ``inf``; reject p < 1."""
    if isinstance(p, str):
        p = math.inf if p.strip().lower() in ("inf", "infinity") else float(Fraction(p))
    p = float(p)
    if math.isnan(p) or p < 1:
        raise DomainError(f"{name} must lie in [1, inf], got {p}")
    return p


def check_positive(x, name):
    if not isinstance(x, Real) or not x > 0:
        raise DomainError(f"{name} must be positive, got {x!r}")
    return x


def check_odd(k, name="k"):
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ConfigurationError(f"{name} must be an odd positive integer, got {k!r}")
    return int(k)


def check_same_lattice(*fns):
    first = fns[0].lattice
    for f in fns[1:]:
        if f.lattice != first:
            raise ConfigurationError("grid functions live on different lattices")
    return first


def as_rng(seed):
    return np.random.default_rng(seed)
