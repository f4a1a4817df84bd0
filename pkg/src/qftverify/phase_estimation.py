"""Phase estimation with a random n-bit offset.

Before the (possibly faulty) inverse QFT the first register holds
sum_j exp(2 pi i j theta)|j>/sqrt(N). Shifting theta by a uniformly random
lam/N and subtracting lam from the outcome turns worst-case behaviour of the
channel on one Fourier basis state into its average over all of them.

The controlled-U stage is never simulated: the register state after it is
written down directly from theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import Channel, output_distribution, sample_outcomes, row_chunks
from .statevector import offset_phase_state_batch

MAX_PSD_SUPPORT = 64
PSD_ATOL = 1e-10


@dataclass(frozen=True)
class PhaseRunOutcome:
    lambda_int: int
    raw_outcome: int
    corrected: int


@dataclass(frozen=True)
class WindowSpec:
    K: int
    k_star: int
    S: tuple[int, ...]

    @classmethod
    def around(cls, theta: float, K: int, n: int) -> "WindowSpec":
        dim = 1 << n
        if K < 1 or 2 * K > dim:
            raise ValueError(f"need 1 <= K and 2K <= 2**n, got K={K}")
        k_star = math.floor(dim * (theta % 1.0)) % dim
        return cls(K, k_star, tuple((k_star + d) % dim for d in range(-K + 1, K + 1)))


def _check_channel(channel: Channel, n: int) -> None:
    if channel.num_qubits != n:
        raise ValueError(f"channel acts on {channel.num_qubits} qubits, not {n}")


def pe_batch(
    channel: Channel,
    thetas,
    n: int,
    rng: np.random.Generator,
    lambda_int: int | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized randomized phase estimation, one shot per entry of ``thetas``.

    Returns (lambdas, raw outcomes, corrected outcomes). ``lambda_int``
    pins the offset instead of drawing it (debug hook).
    """
    _check_channel(channel, n)
    dim = 1 << n
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if lambda_int is None:
        lambdas = rng.integers(0, dim, size=thetas.size)
    else:
        lambdas = np.full(thetas.size, int(lambda_int) % dim, dtype=np.int64)
    raw = np.empty(thetas.size, dtype=np.int64)
    for lo, hi in row_chunks(thetas.size, dim):
        states = offset_phase_state_batch(n, thetas[lo:hi], lambdas[lo:hi])
        raw[lo:hi] = sample_outcomes(channel, states, rng)
    return lambdas, raw, np.mod(raw - lambdas, dim)


def run_pe_once(
    channel: Channel,
    theta: float,
    n: int,
    rng: np.random.Generator,
    lambda_int: int | None = None,
) -> PhaseRunOutcome:
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    lam, raw, corr = pe_batch(channel, [theta], n, rng, lambda_int)
    return PhaseRunOutcome(int(lam[0]), int(raw[0]), int(corr[0]))


def randomized_pe(
    channel: Channel,
    theta: float,
    n: int,
    shots: int,
    rng: np.random.Generator,
    lambda_int: int | None = None,
) -> list[PhaseRunOutcome]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    lam, raw, corr = pe_batch(channel, np.full(shots, theta), n, rng, lambda_int)
    return [PhaseRunOutcome(int(a), int(b), int(c)) for a, b, c in zip(lam, raw, corr)]


def circular_distance(a, b):
    """Distance on the unit circle [0, 1): min(d, 1 - d) with d = |a - b| mod 1."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def good_outcome(corrected: int, theta: float, K: int, n: int) -> bool:
    """True iff corrected / 2**n is within K / 2**n of theta, mod 1."""
    dim = 1 << n
    return bool(good_mask(np.asarray([corrected]), theta, K, n)[0]) if 0 <= corrected < dim else False


def good_mask(corrected: np.ndarray, theta, K: int, n: int) -> np.ndarray:
    dim = 1 << n
    # compare in units of 1/N to keep n-bit cases exact
    d = np.mod(np.asarray(corrected, dtype=float) - dim * np.asarray(theta, dtype=float), dim)
    return np.minimum(d, dim - d) <= K + 1e-9


def bad_fraction(outcomes: Sequence[PhaseRunOutcome], theta: float, K: int, n: int) -> float:
    corr = np.array([o.corrected for o in outcomes])
    return float(np.mean(~good_mask(corr, theta, K, n)))


def circular_median(values) -> float:
    """Sample point minimizing the summed circular distance to all samples.

    Ties go to the smaller value.
    """
    v = np.mod(np.asarray(values, dtype=float).ravel(), 1.0)
    if v.size == 0:
        raise ValueError("median of an empty sample")
    cand = np.unique(v)
    costs = np.array([circular_distance(c, v).sum() for c in cand])
    # costs are sums of floats; treat near-equal as ties
    best = np.flatnonzero(costs <= costs.min() + 1e-12 * max(1.0, v.size))
    return float(cand[best[0]])


def median_phase_estimate(outcomes: Sequence[PhaseRunOutcome], n: int) -> float:
    if not outcomes:
        raise ValueError("median of an empty outcome list")
    return circular_median([o.corrected / (1 << n) for o in outcomes])


# --------------------------------------------------------------------------
# Exact (sampling-free) failure probabilities
# --------------------------------------------------------------------------


def exact_offset_distributions(channel: Channel, theta: float, n: int) -> np.ndarray:
    """Row lam = distribution of the corrected outcome when the offset is lam."""
    _check_channel(channel, n)
    dim = 1 << n
    lambdas = np.arange(dim)
    dist = np.empty((dim, dim))
    for lo, hi in row_chunks(dim, dim):
        probs = output_distribution(channel, offset_phase_state_batch(n, theta, lambdas[lo:hi]))
        # corrected = raw - lam, so shift each row left by lam
        for r, lam in enumerate(range(lo, hi)):
            dist[lam] = np.roll(probs[r], -lam)
    return dist


def exact_failure_probability(channel: Channel, theta: float, n: int) -> float:
    """Probability (averaged over every offset) that the corrected outcome is not N theta.

    ``theta`` must be an n-bit phase.
    """
    dim = 1 << n
    k = round(theta * dim)
    if abs(theta * dim - k) > 1e-9:
        raise ValueError("theta is not an n-bit phase")
    dist = exact_offset_distributions(channel, theta, n)
    return 1.0 - math.fsum(dist[:, k % dim]) / dim


def exact_bad_probability(channel: Channel, theta: float, n: int, K: int) -> float:
    """Offset-averaged probability that the corrected outcome is farther than K/N from theta."""
    dim = 1 << n
    dist = exact_offset_distributions(channel, theta, n)
    bad = ~good_mask(np.arange(dim), theta, K, n)
    return math.fsum(dist[:, bad].sum(axis=1)) / dim


# --------------------------------------------------------------------------
# Error budget
# --------------------------------------------------------------------------


def closed_form_bad_outcome_bound(K: int, eta: float) -> float:
    """4 K eta + (1/2 - K eta)(1/K + 1/(K - 1)): bad-outcome bound with the closed-form tail."""
    if K < 2:
        raise ValueError("bound needs K >= 2")
    if eta < 0 or K * eta > 0.5:
        raise ValueError("bound needs 0 <= eta and K*eta <= 1/2")
    return 4 * K * eta + (0.5 - K * eta) * (1.0 / K + 1.0 / (K - 1))


def bad_outcome_bound(K: int, eta: float, tail: float) -> float:
    """2|S| eta + 2(1 - |S| eta) tail with |S| = 2K and a supplied tail weight."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if eta < 0 or not 0 <= tail <= 1:
        raise ValueError("need eta >= 0 and tail in [0, 1]")
    size = 2 * K
    return 2 * size * eta + 2 * (1 - size * eta) * tail


def small_support_min_eigenvalue(beta) -> float:
    """Smallest eigenvalue of |T| diag(|beta|^2) - |psi><psi|."""
    beta = np.asarray(beta, dtype=complex).ravel()
    if beta.size > MAX_PSD_SUPPORT:
        raise ValueError(f"support larger than {MAX_PSD_SUPPORT}")
    if beta.size == 0:
        raise ValueError("empty support")
    m = beta.size * np.diag(np.abs(beta) ** 2) - np.outer(beta, beta.conj())
    return float(np.linalg.eigvalsh(m)[0])


def small_support_psd_check(beta) -> bool:
    return small_support_min_eigenvalue(beta) >= -PSD_ATOL


def small_support_tightness_ratio(beta) -> float:
    """<phi|psi><psi|phi> / <phi|M|phi> at phi proportional to sum_j (1/conj(beta_j))|j>.

    Equals 1 whenever every beta_j is nonzero, so the |T| factor cannot be lowered.
    """
    beta = np.asarray(beta, dtype=complex).ravel()
    if np.any(beta == 0):
        raise ValueError("all coefficients must be nonzero")
    phi = 1.0 / beta.conj()
    phi = phi / np.linalg.norm(phi)
    num = abs(np.vdot(phi, beta)) ** 2
    den = beta.size * float(np.sum(np.abs(beta) ** 2 * np.abs(phi) ** 2))
    return num / den
