"""Period finding and amplitude estimation on top of randomized phase estimation.

Both reduce to phase estimation where the eigenstate register holds a
superposition of eigenvectors. Measurement statistics on the phase register
are those of a mixture, so each run first samples an eigenphase and then
runs one randomized-PE shot through the channel under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channels import Channel
from .phase_estimation import circular_median, pe_batch
from .statevector import StateVector, sample_rows

MAX_PERIODIC_N = 1 << 14


@dataclass(frozen=True)
class PeriodicStateSpec:
    N: int
    r: int
    s: int = 0

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")
        if not 1 <= self.r < self.N:
            raise ValueError(f"period r must lie in [1, N), got {self.r}")
        if not 0 <= self.s < self.r:
            raise ValueError(f"offset s must lie in [0, r), got {self.s}")

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def p(self) -> int:
        return -(-(self.N - self.s) // self.r)

    def support(self) -> np.ndarray:
        return self.s + self.r * np.arange(self.p)


@dataclass(frozen=True)
class PeriodFindingResult:
    outcome_j: int
    candidate_period: int | None
    convergents: list[tuple[int, int]] = field(default_factory=list)
    success: bool = False
    sampled_j: int | None = None


@dataclass(frozen=True)
class AmplitudeEstimate:
    mu_hat: float
    samples: list[float] = field(default_factory=list)


def periodic_state(spec: PeriodicStateSpec) -> StateVector:
    amps = np.zeros(spec.N, dtype=complex)
    amps[spec.support()] = 1.0 / math.sqrt(spec.p)
    return StateVector(spec.n, amps)


def fourier_coefficients_periodic(spec: PeriodicStateSpec) -> np.ndarray:
    """alpha_j = omega^(js) / sqrt(pN) * sum_z omega^(jzr), summed in closed form."""
    N, r, s, p = spec.N, spec.r, spec.s, spec.p
    if N > MAX_PERIODIC_N:
        raise ValueError(f"N capped at {MAX_PERIODIC_N}")
    j = np.arange(N, dtype=np.int64)
    step = (j * r) % N
    ratio = np.exp(2j * np.pi * step / N)
    full = np.exp(2j * np.pi * ((step * p) % N) / N)
    resonant = step == 0
    safe = np.where(resonant, 1.0, 1.0 - ratio)
    geom = np.where(resonant, p, (1.0 - full) / safe)
    return np.exp(2j * np.pi * ((j * s) % N) / N) * geom / math.sqrt(p * N)


def continued_fraction_convergents(j: int, N: int) -> list[tuple[int, int]]:
    """Convergents c/r' of j/N in lowest terms, from the first to j/N itself."""
    if N < 1 or not 0 <= j < N:
        raise ValueError(f"need 0 <= j < N, got j={j}, N={N}")
    out = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    num, den = j, N
    while den:
        a, rem = divmod(num, den)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append((h, k))
        num, den = den, rem
    return out


def select_period(j: int, N: int, R: int) -> tuple[int | None, list[tuple[int, int]]]:
    """Closest convergent with denominator <= R, ties to the smaller denominator.

    The candidate is kept only if it lies within 1/(2N) of j/N.
    """
    convs = continued_fraction_convergents(j, N)
    target = Fraction(j, N)
    best = None
    for c, d in convs:
        if d > R:
            continue
        err = abs(target - Fraction(c, d))
        if best is None or err < best[0] or (err == best[0] and d < best[1]):
            best = (err, d)
    if best is None or best[0] > Fraction(1, 2 * N):
        return None, convs
    return best[1], convs


def near_multiple(j, N: int, r: int):
    """True where |j - cN/r| < 1 for some integer c, in exact integer arithmetic."""
    m = np.mod(np.asarray(j, dtype=np.int64) * r, N)
    return np.minimum(m, N - m) < r


def period_finding_runs(
    channel: Channel,
    spec: PeriodicStateSpec,
    period_bound_R: int,
    runs: int,
    rng: np.random.Generator,
) -> list[PeriodFindingResult]:
    if period_bound_R < spec.r:
        raise ValueError(f"period bound R={period_bound_R} is below the period {spec.r}")
    if channel.num_qubits != spec.n:
        raise ValueError(f"channel acts on {channel.num_qubits} qubits, need {spec.n}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    weights = np.abs(fourier_coefficients_periodic(spec)) ** 2
    js = sample_rows(np.broadcast_to(weights, (runs, spec.N)), rng)
    _, _, corrected = pe_batch(channel, js / spec.N, spec.n, rng)
    results = []
    for j_true, j in zip(js, corrected):
        cand, convs = select_period(int(j), spec.N, period_bound_R)
        results.append(PeriodFindingResult(int(j), cand, convs, cand == spec.r, int(j_true)))
    return results


def period_finding_run(
    channel: Channel,
    spec: PeriodicStateSpec,
    period_bound_R: int,
    rng: np.random.Generator,
) -> PeriodFindingResult:
    return period_finding_runs(channel, spec, period_bound_R, 1, rng)[0]


def fold(estimate):
    """Map phase estimates in [1/2, 1) to 1 - estimate."""
    e = np.asarray(estimate, dtype=float)
    return np.where(e > 0.5, 1.0 - e, e)


def amplitude_estimation(
    channel: Channel,
    mu: float,
    n: int,
    shots: int,
    rng: np.random.Generator,
) -> AmplitudeEstimate:
    """Estimate mu from A|0> = sin(mu)|phi1>|1> + cos(mu)|phi0>|0>.

    The Grover-type rotation has eigenphases mu/pi and 1 - mu/pi; each shot
    picks one with probability 1/2.
    """
    if not 0 <= mu <= math.pi / 2:
        raise ValueError("mu must lie in [0, pi/2]")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    base = mu / math.pi
    branch = rng.random(shots) < 0.5
    thetas = np.where(branch, base, np.mod(-base, 1.0))
    _, _, corrected = pe_batch(channel, thetas, n, rng)
    folded = fold(corrected / (1 << n))
    return AmplitudeEstimate(math.pi * circular_median(folded), folded.tolist())
