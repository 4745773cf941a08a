"""The five one-dimensional semifields used for scale-spaces.

Every semifield exposes vectorised ``add``/``mul`` (the circled plus and
times), its identities ``zero``/``one``, the semifield exponential, the
metric, the measure-scaling homomorphism ``chi`` and the discrete
semifield integral.  Values are plain floats or numpy arrays; the additive
identity of the logarithmic and tropical semifields is the matching
floating point infinity.

Sentinel arithmetic (``z`` is the semifield zero, ``a`` any valid value)::

    kind          z       a (+) z   a (x) z   z (+) z   z (x) z
    linear        0       a         0         0         0
    root(p>0)     0       a         0         0         0
    root(p<0)     +inf    a         +inf      +inf      +inf
    log(mu>0)     -inf    a         -inf      -inf      -inf
    log(mu<0)     +inf    a         +inf      +inf      +inf
    tmax          -inf    a         -inf      -inf      -inf
    tmin          +inf    a         +inf      +inf      +inf
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "NoIsomorphismError",
    "Semifield",
    "Linear",
    "Root",
    "Log",
    "TropicalMax",
    "TropicalMin",
    "parse_semifield",
    "add",
    "mul",
    "exp_semifield",
    "metric",
    "isomorphism_to_reference",
]


class DomainError(ValueError):
    """A value does not belong to the semifield it is used with."""


class NoIsomorphismError(ValueError):
    """No semifield isomorphism is known between two kinds."""


def _arr(x):
    return np.asarray(x, dtype=float)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


class Semifield:
    """Base class; concrete semifields are the frozen dataclasses below."""

    zero: float
    one: float

    # --- validation -----------------------------------------------------
    def valid(self, a) -> np.ndarray:
        """Boolean mask of entries of ``a`` that belong to the semifield."""
        raise NotImplementedError

    def check(self, *values):
        for a in values:
            if not np.all(self.valid(a)):
                raise DomainError(f"value(s) outside the {self} semifield: {np.asarray(a)[~self.valid(a)][:5]}")

    # --- algebra --------------------------------------------------------
    def add(self, a, b):
        self.check(a, b)
        return _out(self._add(_arr(a), _arr(b)))

    def mul(self, a, b):
        self.check(a, b)
        return _out(self._mul(_arr(a), _arr(b)))

    def inverse(self, a):
        self.check(a)
        a = _arr(a)
        if np.any(a == self.zero):
            raise DomainError("the semifield zero has no multiplicative inverse")
        return _out(self._inverse(a))

    def exp(self, t):
        """Semifield exponential: a one-parameter subgroup with exp(0) = one."""
        return _out(self._exp(_arr(t)))

    def metric(self, a, b):
        self.check(a, b)
        with np.errstate(over="ignore", invalid="ignore"):
            return _out(self._metric(_arr(a), _arr(b)))

    def chi(self, s):
        """Measure scaling: the semifield measure of ``s * A`` is ``chi(s) (x) mu(A)``."""
        s = _arr(s)
        if np.any(s <= 0):
            raise ValueError("scaling must be positive")
        return _out(self._chi(s))

    def integrate(self, values, axis=None, cell_area=1.0):
        """Discrete semifield integral of samples on cells of area ``cell_area``."""
        values = _arr(values)
        self.check(values)
        return _out(self._integrate(values, axis, float(cell_area)))

    # --- isomorphism with the reference semifield ------------------------
    @property
    def reference(self) -> "Semifield":
        raise NotImplementedError

    def to_reference(self, x):
        return _out(_arr(x))

    def from_reference(self, y):
        return _out(_arr(y))

    # subclasses implement the raw array versions
    def _add(self, a, b):
        raise NotImplementedError

    def _mul(self, a, b):
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(Semifield):
    """(R, 0, 1, +, x)."""

    zero = 0.0
    one = 1.0

    def __str__(self):
        return "linear"

    def valid(self, a):
        return np.isfinite(_arr(a))

    def _add(self, a, b):
        return a + b

    def _mul(self, a, b):
        return a * b

    def _inverse(self, a):
        return 1.0 / a

    def _exp(self, t):
        return np.exp(-t)

    def _metric(self, a, b):
        return np.abs(a - b)

    def _chi(self, s):
        return s**2

    def _integrate(self, v, axis, area):
        return np.sum(v, axis=axis) * area

    @property
    def reference(self):
        return self


@dataclass(frozen=True)
class Root(Semifield):
    """(R>=0, 0, 1, (a^p + b^p)^(1/p), x); for p < 0 the zero is +inf."""

    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p == 0:
            raise ValueError("root semifield needs a finite nonzero p")

    @property
    def zero(self):
        return 0.0 if self.p > 0 else np.inf

    one = 1.0

    def __str__(self):
        return f"root:{self.p:g}"

    def valid(self, a):
        a = _arr(a)
        if self.p > 0:
            return (a >= 0) & np.isfinite(a)
        return a > 0

    def _add(self, a, b):
        with np.errstate(divide="ignore", over="ignore"):
            return (a**self.p + b**self.p) ** (1.0 / self.p)

    def _mul(self, a, b):
        return a * b

    def _inverse(self, a):
        return 1.0 / a

    def _exp(self, t):
        return np.exp(-t)

    def _metric(self, a, b):
        with np.errstate(divide="ignore"):
            return np.abs(a**self.p - b**self.p)

    def _chi(self, s):
        return s ** (2.0 / self.p)

    def _integrate(self, v, axis, area):
        with np.errstate(divide="ignore"):
            return (np.sum(v**self.p, axis=axis) * area) ** (1.0 / self.p)

    @property
    def reference(self):
        return Linear()

    def to_reference(self, x):
        x = _arr(x)
        self.check(x)
        with np.errstate(divide="ignore"):
            return _out(x**self.p)

    def from_reference(self, y):
        y = _arr(y)
        if np.any(y < 0):
            raise DomainError("only nonnegative reals map back into a root semifield")
        with np.errstate(divide="ignore"):
            return _out(y ** (1.0 / self.p))


@dataclass(frozen=True)
class Log(Semifield):
    """(R u {-sign(mu) inf}, zero, 0, (1/mu) ln(e^(mu a) + e^(mu b)), +)."""

    mu: float

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu == 0:
            raise ValueError("logarithmic semifield needs a finite nonzero mu")

    @property
    def zero(self):
        return -np.inf if self.mu > 0 else np.inf

    one = 0.0

    def __str__(self):
        return f"log:{self.mu:g}"

    def valid(self, a):
        a = _arr(a)
        return np.isfinite(a) | (a == self.zero)

    def _add(self, a, b):
        # logaddexp shifts by the maximum internally, so |mu a| > 700 is safe
        return np.logaddexp(self.mu * a, self.mu * b) / self.mu

    def _mul(self, a, b):
        return a + b

    def _inverse(self, a):
        return -a

    def _exp(self, t):
        return -np.sign(self.mu) * t

    def _metric(self, a, b):
        return np.abs(np.exp(self.mu * a) - np.exp(self.mu * b))

    def _chi(self, s):
        return np.log(s**2) / self.mu

    def _integrate(self, v, axis, area):
        z = self.mu * v
        m = np.max(z, axis=axis, keepdims=True)
        m_safe = np.where(np.isfinite(m), m, 0.0)
        with np.errstate(divide="ignore"):
            lse = np.log(np.sum(np.exp(z - m_safe), axis=axis, keepdims=True)) + m_safe
        lse = lse.squeeze() if axis is None else np.squeeze(lse, axis=axis)
        return (lse + np.log(area)) / self.mu

    @property
    def reference(self):
        return Linear()

    def to_reference(self, x):
        x = _arr(x)
        self.check(x)
        return _out(np.exp(self.mu * x))

    def from_reference(self, y):
        y = _arr(y)
        if np.any(y < 0):
            raise DomainError("only nonnegative reals map back into a logarithmic semifield")
        with np.errstate(divide="ignore"):
            return _out(np.log(y) / self.mu)


@dataclass(frozen=True)
class TropicalMax(Semifield):
    """(R u {-inf}, -inf, 0, max, +)."""

    zero = -np.inf
    one = 0.0

    def __str__(self):
        return "tmax"

    def valid(self, a):
        a = _arr(a)
        return np.isfinite(a) | (a == -np.inf)

    def _add(self, a, b):
        return np.maximum(a, b)

    def _mul(self, a, b):
        return a + b

    def _inverse(self, a):
        return -a

    def _exp(self, t):
        return -t

    def _metric(self, a, b):
        return np.abs(np.exp(a) - np.exp(b))

    def _chi(self, s):
        return np.zeros_like(s)

    def _integrate(self, v, axis, area):
        return np.max(v, axis=axis)

    @property
    def reference(self):
        return self


@dataclass(frozen=True)
class TropicalMin(Semifield):
    """(R u {+inf}, +inf, 0, min, +)."""

    zero = np.inf
    one = 0.0

    def __str__(self):
        return "tmin"

    def valid(self, a):
        a = _arr(a)
        return np.isfinite(a) | (a == np.inf)

    def _add(self, a, b):
        return np.minimum(a, b)

    def _mul(self, a, b):
        return a + b

    def _inverse(self, a):
        return -a

    def _exp(self, t):
        return t

    def _metric(self, a, b):
        return np.abs(np.exp(-a) - np.exp(-b))

    def _chi(self, s):
        return np.zeros_like(s)

    def _integrate(self, v, axis, area):
        return np.min(v, axis=axis)

    @property
    def reference(self):
        return TropicalMax()

    def to_reference(self, x):
        x = _arr(x)
        self.check(x)
        return _out(-x)

    def from_reference(self, y):
        return _out(-_arr(y))


def parse_semifield(text: str) -> Semifield:
    """Parse ``linear``, ``root:P``, ``log:MU``, ``tmax`` or ``tmin``."""
    name, _, arg = str(text).strip().lower().partition(":")
    if name == "linear" and not arg:
        return Linear()
    if name in ("tmax", "tropical-max", "tropicalmax") and not arg:
        return TropicalMax()
    if name in ("tmin", "tropical-min", "tropicalmin") and not arg:
        return TropicalMin()
    if name == "root" and arg:
        return Root(float(arg))
    if name == "log" and arg:
        return Log(float(arg))
    raise ValueError(f"cannot parse semifield {text!r}; expected linear|root:p|log:mu|tmax|tmin")


# Functional forms of the methods.

def add(kind: Semifield, a, b):
    return kind.add(a, b)


def mul(kind: Semifield, a, b):
    return kind.mul(a, b)


def exp_semifield(kind: Semifield, t):
    return kind.exp(t)


def metric(kind: Semifield, a, b):
    return kind.metric(a, b)


def isomorphism_to_reference(kind: Semifield) -> tuple[Callable, Callable]:
    """Pointwise isomorphism onto the reference semifield and its inverse.

    Root and logarithmic semifields map onto the nonnegative linear one
    (``x**p`` and ``exp(mu x)``), tropical min maps onto tropical max by
    negation; linear and tropical max are their own reference and get the
    identity.
    """
    return kind.to_reference, kind.from_reference
