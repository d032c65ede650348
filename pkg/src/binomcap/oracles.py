"""Ground-truth fixtures and an independent grid-search capacity oracle.

The n <= 3 solutions are stored as exact rationals and converted to floats
only at the boundary, so the fixtures cannot drift.  The grid oracle is a
deliberately plain Blahut-Arimoto loop that shares nothing with the
production solver beyond pmf evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import DiscreteInput, OutputPmf
from .kernel import ChannelSpec, log_pmf_matrix

_HALF = Fraction(1, 2)

_TABLE = {
    1: {
        "capacity": Fraction(2),  # capacity = log of this rational
        "points": [Fraction(0), Fraction(1)],
        "weights": [_HALF, _HALF],
        "output": [_HALF, _HALF],
    },
    2: {
        "capacity": Fraction(17, 8),
        "points": [Fraction(0), _HALF, Fraction(1)],
        "weights": [Fraction(15, 34), Fraction(2, 17), Fraction(15, 34)],
        "output": [Fraction(8, 17), Fraction(1, 17), Fraction(8, 17)],
    },
    3: {
        "capacity": Fraction(19, 8),
        "points": [Fraction(0), _HALF, Fraction(1)],
        "weights": [Fraction(15, 38), Fraction(4, 19), Fraction(15, 38)],
        "output": [Fraction(8, 19), Fraction(3, 38), Fraction(3, 38), Fraction(8, 19)],
    },
}


@dataclass(frozen=True)
class ExactSolution:
    """Known closed-form optimum for a small trial count."""

    n: int
    capacity_nats: float
    capacity_exp: Fraction  # e^{C} as an exact rational
    input: DiscreteInput
    output: OutputPmf
    weights_exact: tuple
    points_exact: tuple


def exact_solution(n: int) -> ExactSolution:
    """Closed-form capacity and optimal distributions for n in {1, 2, 3}."""
    if n not in _TABLE:
        raise ValueError(f"closed-form solution known only for n in {{1, 2, 3}}, got {n}")
    row = _TABLE[n]
    dist = DiscreteInput(
        np.array([float(p) for p in row["points"]]),
        np.array([float(w) for w in row["weights"]]),
    )
    out = OutputPmf(np.array([float(q) for q in row["output"]]), n)
    return ExactSolution(
        n=n,
        capacity_nats=math.log(row["capacity"]),
        capacity_exp=row["capacity"],
        input=dist,
        output=out,
        weights_exact=tuple(row["weights"]),
        points_exact=tuple(row["points"]),
    )


def brute_force_grid_capacity(spec: ChannelSpec, grid_points: int, tol: float,
                              max_iters: int = 2_000_000) -> float:
    """Capacity lower bound from plain Blahut-Arimoto on a uniform grid.

    No support refinement, no symmetrization: a from-scratch cross-check of
    the production solver.  The duality gap max_k D_k - sum_k w_k D_k is
    certified over the full grid before stopping; grid points whose weight
    decays below 1e-40 are frozen at zero to keep iterations cheap (and are
    revived if their information density recovers).  Raises if the gap does
    not close within the iteration cap.
    """
    if grid_points < 101 or grid_points % 2 == 0:
        raise ValueError("grid_points must be odd and at least 101")
    if tol <= 0:
        raise ValueError("tol must be positive")
    xs = np.linspace(0.0, 1.0, grid_points)
    logP = log_pmf_matrix(spec, xs)
    P = np.exp(logP)
    with np.errstate(invalid="ignore"):
        row_neg_entropy = np.sum(np.where(P > 0, P * logP, 0.0), axis=1)
    w = np.full(grid_points, 1.0 / grid_points)
    active = np.ones(grid_points, dtype=bool)
    check_every = 250
    for it in range(1, max_iters + 1):
        Pa = P[active]
        q = w[active] @ Pa
        logq = np.log(np.maximum(q, 1e-300))
        Da = row_neg_entropy[active] - Pa @ logq
        lo = float(w[active] @ Da)
        hi_active = float(Da.max())
        if hi_active - lo <= tol or it % check_every == 0:
            D = row_neg_entropy - P @ logq
            revive = (~active) & (D > hi_active + 0.5 * tol)
            if revive.any():
                w[revive] = 1e-20
                active |= revive
                w /= w.sum()
                continue
            if float(D.max()) - lo <= tol:
                return lo
        w[active] = w[active] * np.exp(Da - hi_active)
        dying = active & (w < 1e-40)
        if dying.any():
            w[dying] = 0.0
            active &= ~dying
        w[active] /= w[active].sum()
    raise RuntimeError(
        f"grid Blahut-Arimoto did not reach duality gap {tol} within {max_iters} iterations"
    )
