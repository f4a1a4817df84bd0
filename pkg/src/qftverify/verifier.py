"""Lightweight average-infidelity test for a black-box inverse QFT.

Each round prepares a uniformly random Fourier basis state |k^> as a
product state, runs one shot of the channel, measures, and counts a failure
when the outcome is not k. The failure frequency estimates the average
infidelity over Fourier basis states.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .channels import Channel, sample_outcomes
from .statevector import fourier_basis_batch


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"


@dataclass(frozen=True)
class InfidelityEstimate:
    eta_hat: float
    shots: int
    epsilon: float
    delta: float
    failures: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_params(epsilon: float, delta: float) -> None:
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def hoeffding_shots(epsilon: float, delta: float) -> int:
    """ceil(ln(2/delta) / (2 epsilon^2)): two-sided Hoeffding for Bernoulli rounds."""
    _check_params(epsilon, delta)
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon * epsilon))


def count_failures(channel: Channel, n: int, rounds: int, rng: np.random.Generator) -> int:
    """Run ``rounds`` test rounds and return how many did not return k."""
    if channel.num_qubits != n:
        raise ValueError(f"channel acts on {channel.num_qubits} qubits, not {n}")
    if rounds <= 0:
        return 0
    ks = rng.integers(0, 1 << n, size=rounds)
    outcomes = sample_outcomes(channel, fourier_basis_batch(n, ks), rng)
    return int(np.count_nonzero(outcomes != ks))


def estimate_average_infidelity(
    channel: Channel,
    n: int,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
) -> InfidelityEstimate:
    shots = hoeffding_shots(epsilon, delta)
    failures = count_failures(channel, n, shots, rng)
    return InfidelityEstimate(failures / shots, shots, epsilon, delta, failures)


def estimate_average_infidelity_sequential(
    channel: Channel,
    n: int,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    first_batch: int = 64,
) -> InfidelityEstimate:
    """Adaptive variant that stops early when the failure rate is small.

    Runs batches of doubling size and stops once the empirical-Bernstein
    half-width drops below ``epsilon``. The confidence budget is split
    delta / (i (i + 1)) over checkpoints i = 1, 2, ... The fixed Hoeffding
    budget caps the total, so this never uses more rounds than the
    fixed-shot estimator.
    """
    cap = hoeffding_shots(epsilon, delta)
    shots = failures = 0
    batch = first_batch
    checkpoint = 0
    while shots < cap:
        step = min(batch, cap - shots)
        failures += count_failures(channel, n, step, rng)
        shots += step
        batch *= 2
        checkpoint += 1
        if shots >= cap:
            break
        mean = failures / shots
        var = mean * (1.0 - mean) * shots / max(shots - 1, 1)
        log_term = math.log(3.0 * checkpoint * (checkpoint + 1) / delta)
        half_width = math.sqrt(2.0 * var * log_term / shots) + 3.0 * log_term / shots
        if half_width <= epsilon:
            break
    return InfidelityEstimate(failures / shots, shots, epsilon, delta, failures)


def verdict(estimate: InfidelityEstimate, threshold_eta: float) -> Verdict:
    """PASS iff eta_hat + epsilon <= threshold (ties pass)."""
    if not 0 < threshold_eta < 1:
        raise ValueError("threshold_eta must lie in (0, 1)")
    # tolerate rounding in eta_hat + epsilon so exact ties pass
    ok = estimate.eta_hat + estimate.epsilon <= threshold_eta + 1e-12
    return Verdict.PASS if ok else Verdict.FAIL
