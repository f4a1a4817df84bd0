import math

import numpy as np
import pytest

from qftverify.channels import (
    AdversarialFourierCorruptor,
    ExactUnitary,
    StochasticMixture,
    perfect_inverse_qft,
)
from qftverify.statevector import inverse_qft_circuit, pauli_x
from qftverify.verifier import (
    InfidelityEstimate,
    Verdict,
    count_failures,
    estimate_average_infidelity,
    estimate_average_infidelity_sequential,
    hoeffding_shots,
    verdict,
)

QUARTER = AdversarialFourierCorruptor(3, {1: 4, 6: 2})


def est(eta_hat, eps):
    return InfidelityEstimate(eta_hat, 1000, eps, 0.1, round(eta_hat * 1000))


@pytest.mark.parametrize(
    "eps, delta, expected",
    [
        (0.05, 0.1, 600),
        (0.05, 0.01, 1060),
        (0.02, 0.01, 6623),
        (0.01, 0.01, 26492),
        (0.1, 0.05, 185),
        (0.1, 0.5, 70),
        (0.2, 0.1, 38),
        (0.03, 0.1, 1665),
        (0.5, 0.9, 2),
        (0.001, 0.001, 3800452),
    ],
)
def test_hoeffding_shot_count(eps, delta, expected):
    # frozen values of ceil(ln(2/delta) / (2 eps^2)); none sits within 1e-3 of an integer
    assert hoeffding_shots(eps, delta) == expected
    assert expected == math.ceil(math.log(2 / delta) / (2 * eps**2))


@pytest.mark.parametrize("eps, delta", [(0, 0.1), (1, 0.1), (0.1, 0), (0.1, 1), (-0.1, 0.5)])
def test_parameter_ranges(eps, delta):
    with pytest.raises(ValueError):
        hoeffding_shots(eps, delta)


def test_perfect_channel_never_fails(rng):
    e = estimate_average_infidelity(perfect_inverse_qft(8), 8, 0.05, 0.01, rng)
    assert e.eta_hat == 0.0 and e.failures == 0 and e.shots == 1060


def test_quarter_channel_estimate(rng):
    e = estimate_average_infidelity(QUARTER, 3, 0.02, 0.01, rng)
    assert 0.23 <= e.eta_hat <= 0.27
    assert e.eta_hat == e.failures / e.shots


def test_bit_flip_always_fails(rng):
    ch = ExactUnitary(inverse_qft_circuit(4).then([pauli_x(0)]))
    assert estimate_average_infidelity(ch, 4, 0.1, 0.1, rng).eta_hat == 1.0


def test_dimension_checked(rng):
    with pytest.raises(ValueError):
        count_failures(perfect_inverse_qft(3), 4, 10, rng)


def test_unbiased_over_200_runs():
    rng = np.random.default_rng(11)
    eta, eps, delta = 0.25, 0.05, 0.1
    runs = [estimate_average_infidelity(QUARTER, 3, eps, delta, rng) for _ in range(200)]
    shots = runs[0].shots
    mean = np.mean([r.eta_hat for r in runs])
    se = math.sqrt(eta * (1 - eta) / (shots * len(runs)))
    assert abs(mean - eta) <= 2 * se


def test_concentration_500_runs():
    rng = np.random.default_rng(12)
    eps, delta = 0.05, 0.1
    misses = sum(
        abs(estimate_average_infidelity(QUARTER, 3, eps, delta, rng).eta_hat - 0.25) > eps for _ in range(500)
    )
    assert misses / 500 <= delta


def test_mixture_estimate_close_to_exact(rng):
    ch = StochasticMixture(((0.9, inverse_qft_circuit(5)), (0.1, inverse_qft_circuit(5).then([pauli_x(2)]))))
    e = estimate_average_infidelity(ch, 5, 0.02, 0.01, rng)
    assert abs(e.eta_hat - 0.1) <= 0.02


def test_sequential_never_exceeds_fixed_budget(rng):
    for ch in (perfect_inverse_qft(4), QUARTER):
        n = ch.num_qubits
        e = estimate_average_infidelity_sequential(ch, n, 0.02, 0.05, rng)
        assert e.shots <= hoeffding_shots(0.02, 0.05)


def test_sequential_stops_early_on_clean_channel(rng):
    e = estimate_average_infidelity_sequential(perfect_inverse_qft(5), 5, 0.02, 0.05, rng)
    assert e.eta_hat == 0.0
    assert e.shots < hoeffding_shots(0.02, 0.05) / 2


def test_sequential_estimate_accuracy():
    rng = np.random.default_rng(5)
    misses = sum(
        abs(estimate_average_infidelity_sequential(QUARTER, 3, 0.05, 0.1, rng).eta_hat - 0.25) > 0.05
        for _ in range(200)
    )
    assert misses / 200 <= 0.1


def test_verdict_examples():
    assert verdict(est(0.0, 0.01), 0.041) is Verdict.PASS
    assert verdict(est(0.05, 0.01), 0.041) is Verdict.FAIL
    assert verdict(est(0.031, 0.01), 0.041) is Verdict.PASS


def test_verdict_threshold_range():
    with pytest.raises(ValueError):
        verdict(est(0.0, 0.01), 0.0)
    with pytest.raises(ValueError):
        verdict(est(0.0, 0.01), 1.0)


def test_estimate_serializes():
    d = est(0.25, 0.05).to_dict()
    assert set(d) == {"eta_hat", "shots", "epsilon", "delta", "failures"}
