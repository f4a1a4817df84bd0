"""Fourier-tail probabilities of a phase state and bounds on them.

A phase state with phase theta, written in the Fourier basis, has squared
coefficients

    |alpha_k|^2 = sin^2(pi x) / (N^2 sin^2(pi (N theta - k) / N)),

where x is the fractional part of N theta. The window S holds the 2K
integers k* - K + 1, ..., k* + K around k* = floor(N theta), taken mod N;
the tail is the total weight outside S.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

log = logging.getLogger(__name__)

SINGULAR_ATOL = 1e-12


@dataclass(frozen=True)
class TailBoundRow:
    N: int
    K: int
    x: float
    exact_tail: float
    rigorous_bound: float
    conjectured_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_N(N: int) -> None:
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")


def _split_phase(N: int, theta: float) -> tuple[int, float]:
    """(k*, x) with N theta = k* + x, k* in [0, N), x in [0, 1)."""
    scaled = N * (theta % 1.0)
    k_star = math.floor(scaled)
    x = scaled - k_star
    return k_star % N, x


def alpha_sq_array(N: int, theta: float, ks) -> np.ndarray:
    _check_N(N)
    k_star, x = _split_phase(N, theta)
    ks = np.asarray(ks, dtype=np.int64)
    # offset N theta - k = (k* - k) + x, reduced to (-N/2, N/2] for a well-conditioned sine
    offset = np.mod(k_star - ks, N).astype(float)
    offset = np.where(offset > N / 2, offset - N, offset) + x
    denom = np.sin(np.pi * offset / N)
    numer = math.sin(math.pi * x) ** 2
    singular = np.abs(denom) < SINGULAR_ATOL
    safe = np.where(singular, 1.0, denom)
    # at resonance the limit of sin^2(pi u)/(N^2 sin^2(pi u/N)) is 1
    return np.where(singular, 1.0, numer / (N * N * safe * safe))


def alpha_sq(N: int, theta: float, k: int) -> float:
    if not 0 <= k < N:
        raise ValueError(f"k must lie in [0, {N})")
    return float(alpha_sq_array(N, theta, [k])[0])


def window(N: int, theta: float, K: int) -> np.ndarray:
    """The 2K integers k* - K + 1, ..., k* + K, reduced mod N."""
    if K < 1 or 2 * K > N:
        raise ValueError(f"need 1 <= K and 2K <= N, got K={K}, N={N}")
    k_star, _ = _split_phase(N, theta)
    return np.mod(np.arange(k_star - K + 1, k_star + K + 1), N)


def tail_probability_exact(N: int, theta: float, K: int) -> float:
    """1 - P, with P the weight of the window around N theta."""
    _check_N(N)
    inside = math.fsum(alpha_sq_array(N, theta, window(N, theta, K)))
    return min(max(1.0 - inside, 0.0), 1.0)


def tail_probability_complement(N: int, theta: float, K: int) -> float:
    """The same tail summed directly over the N - 2K outside terms."""
    S = set(window(N, theta, K).tolist())
    outside = [k for k in range(N) if k not in S]
    return math.fsum(alpha_sq_array(N, theta, outside))


def tail_bound_rigorous(K: int, x: float | None = None) -> float:
    """(1/4)(1/(K - x) + 1/(K - 1 + x)); with ``x=None`` the x-free sup (1/4)(1/K + 1/(K-1))."""
    if K < 2:
        raise ValueError("the rigorous tail bound needs K >= 2")
    if x is None:
        x = 0.0
    if not 0 <= x < 1:
        raise ValueError("x must lie in [0, 1)")
    return 0.25 * (1.0 / (K - x) + 1.0 / (K - 1 + x))


def tail_bound_conjectured(K: int) -> float:
    """4 / (pi^2 (2K - 1)): the tail at x = 1/2, if x = 1/2 is the worst case."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return 4.0 / (math.pi**2 * (2 * K - 1))


def bounds_table(N: int, Ks: Iterable[int], xs: Iterable[float]) -> list[TailBoundRow]:
    _check_N(N)
    rows = []
    for K in Ks:
        for x in xs:
            if not 0 <= x < 1:
                raise ValueError("x must lie in [0, 1)")
            theta = x / N
            rows.append(
                TailBoundRow(
                    N=N,
                    K=K,
                    x=x,
                    exact_tail=tail_probability_exact(N, theta, K),
                    rigorous_bound=tail_bound_rigorous(K),
                    conjectured_bound=tail_bound_conjectured(K),
                )
            )
    return rows


def midpoint_is_worst(N: int, K: int, xs: Iterable[float], tol: float = 1e-12) -> tuple[bool, float, float]:
    """Numerical evidence that x = 1/2 maximizes the tail over ``xs``.

    Returns (holds, worst_x, worst_tail). A counterexample is logged, not
    raised: this is a conjecture, not a theorem.
    """
    mid = tail_probability_exact(N, 0.5 / N, K)
    worst_x, worst = 0.5, mid
    for x in xs:
        t = tail_probability_exact(N, x / N, K)
        if t > worst:
            worst_x, worst = x, t
    holds = worst <= mid + tol
    if not holds:
        log.warning("tail at x=%g (%.6g) exceeds tail at x=1/2 (%.6g) for N=%d K=%d", worst_x, worst, mid, N, K)
    return holds, worst_x, worst
