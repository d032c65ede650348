"""Numerically stable binomial channel kernel and binomial entropy bounds.

All probability arithmetic goes through log-gamma in the log domain so that
trial counts up to a few thousand do not underflow.  The 0 log 0 = 0
convention is applied throughout, so endpoint inputs x = 0 and x = 1 give
finite values instead of NaN.

Everything here is a pure function of its arguments; concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

MAX_TRIALS = 4096


@dataclass(frozen=True)
class ChannelSpec:
    """Binomial channel with a fixed number of trials."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError("trial count n must be an integer")
        if self.n < 1:
            raise ValueError(f"trial count n must be >= 1, got {self.n}")
        if self.n > MAX_TRIALS:
            raise ValueError(
                f"n={self.n} exceeds the supported double-precision range "
                f"(n <= {MAX_TRIALS})"
            )


def _check_x(x) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"success probability x must be in [0, 1], got {x}")
    return x


def log_binom_coeffs(n: int) -> np.ndarray:
    """log C(n, y) for y = 0..n."""
    y = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1)


def log_pmf_matrix(spec: ChannelSpec, xs) -> np.ndarray:
    """Log-pmf rows for an array of inputs; shape (len(xs), n+1).

    Entries are log C(n,y) + y log x + (n-y) log(1-x) with the 0 log 0 = 0
    convention, so endpoint inputs produce 0/-inf rather than NaN.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    n = spec.n
    y = np.arange(n + 1)
    return log_binom_coeffs(n) + xlogy(y, xs[:, None]) + xlog1py(n - y, -xs[:, None])


def log_pmf(spec: ChannelSpec, y: int, x: float) -> float:
    """Log-probability of y successes in n trials at success probability x."""
    if not isinstance(y, (int, np.integer)) or isinstance(y, bool):
        raise ValueError("y must be an integer")
    if not 0 <= y <= spec.n:
        raise ValueError(f"y must be in [0, {spec.n}], got {y}")
    x = _check_x(x)
    n = spec.n
    comb = gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1)
    return float(comb + xlogy(y, x) + xlog1py(n - y, -x))


def pmf_row(spec: ChannelSpec, x: float) -> np.ndarray:
    """Output pmf over y = 0..n for input x; rows sum to 1 within 1e-12."""
    x = _check_x(x)
    return np.exp(log_pmf_matrix(spec, x))[0]


def binary_entropy(x: float) -> float:
    """-x log x - (1-x) log(1-x), in nats."""
    x = _check_x(x)
    return float(-xlogy(x, x) - xlog1py(1.0 - x, -x))


def binomial_entropy_exact(spec: ChannelSpec, x: float) -> float:
    """Entropy of the binomial output at input x, by direct summation."""
    p = pmf_row(spec, x)
    return float(-np.sum(xlogy(p, p)))


def binomial_entropy_upper(spec: ChannelSpec, x: float) -> float:
    """Gaussian-style upper bound 0.5 log(2*pi*e*(n x(1-x) + 1/12))."""
    x = _check_x(x)
    return 0.5 * math.log(2.0 * math.pi * math.e * (spec.n * x * (1.0 - x) + 1.0 / 12.0))


def binomial_entropy_lower(spec: ChannelSpec, x: float) -> float:
    """Closed-form lower bound on the binomial output entropy.

    (1-(1-x)^n-x^n) * 0.5*log(2*pi*n) + 0.5*(1-(1-x)^n)*log(x)
    + 0.5*(1-x^n)*log(1-x) - 1, with endpoint values taken termwise by
    the 0 log 0 = 0 convention (both endpoints give -1).
    """
    x = _check_x(x)
    n = spec.n
    a = (1.0 - x) ** n
    b = x ** n
    main = (1.0 - a - b) * 0.5 * math.log(2.0 * math.pi * n)
    t1 = 0.5 * float(xlogy(1.0 - a, x))
    t2 = 0.5 * float(xlogy(1.0 - b, 1.0 - x))
    return main + t1 + t2 - 1.0
