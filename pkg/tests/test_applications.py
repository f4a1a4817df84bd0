import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qftverify.applications import (
    PeriodicStateSpec,
    amplitude_estimation,
    continued_fraction_convergents,
    fold,
    fourier_coefficients_periodic,
    near_multiple,
    period_finding_run,
    period_finding_runs,
    periodic_state,
    select_period,
)
from qftverify.channels import perfect_inverse_qft
from qftverify.phase_estimation import circular_distance, good_mask

from oracles import convergents_exact, dft

EIGHT_OVER_PI2 = 8 / math.pi**2


def test_periodic_state_examples():
    s = periodic_state(PeriodicStateSpec(16, 4, 0))
    assert np.allclose(s.amplitudes, np.isin(np.arange(16), [0, 4, 8, 12]) * 0.5)
    spec = PeriodicStateSpec(16, 5, 3)
    assert spec.p == 3
    assert np.flatnonzero(periodic_state(spec).amplitudes).tolist() == [3, 8, 13]
    assert np.allclose(periodic_state(spec).amplitudes[[3, 8, 13]], 1 / math.sqrt(3))
    single = PeriodicStateSpec(8, 7, 1)
    assert np.flatnonzero(periodic_state(single).amplitudes).tolist() == [1]


def test_spec_validation():
    for args in [(12, 3, 0), (16, 16, 0), (16, 0, 0), (16, 4, 4), (16, 4, -1)]:
        with pytest.raises(ValueError):
            PeriodicStateSpec(*args)


def test_period_r_equal_N_is_rejected():
    # a period equal to N leaves a single basis state; r must stay below N
    with pytest.raises(ValueError):
        PeriodicStateSpec(8, 8, 1)


def test_coefficients_r4():
    w = np.abs(fourier_coefficients_periodic(PeriodicStateSpec(16, 4, 0))) ** 2
    expected = np.where(np.isin(np.arange(16), [0, 4, 8, 12]), 0.25, 0.0)
    assert np.allclose(w, expected, atol=1e-15)


def test_coefficient_closest_to_multiple():
    w = np.abs(fourier_coefficients_periodic(PeriodicStateSpec(16, 5, 3))) ** 2
    assert w[13] >= 4 / (math.pi**2 * 5)


def test_coefficients_normalized():
    rng = np.random.default_rng(0)
    for _ in range(50):
        N = 2 ** int(rng.integers(2, 12))
        r = int(rng.integers(1, N))
        spec = PeriodicStateSpec(N, r, int(rng.integers(0, r)))
        assert abs(np.sum(np.abs(fourier_coefficients_periodic(spec)) ** 2) - 1) < 1e-10


def test_closed_form_matches_dense_qft_100_specs():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        N = 1 << n
        r = int(rng.integers(1, min(32, N)))
        spec = PeriodicStateSpec(N, r, int(rng.integers(0, r)))
        dense = dft(n) @ periodic_state(spec).amplitudes
        worst = max(worst, np.max(np.abs(dense - fourier_coefficients_periodic(spec))))
    assert worst < 1e-10


def pair_mass(weights, N, r, c):
    lo, hi = math.floor(c * N / r), math.ceil(c * N / r)
    return weights[lo % N] + (weights[hi % N] if hi != lo else 0.0)


def test_total_mass_near_multiples_50_random():
    rng = np.random.default_rng(2)
    seen = 0
    while seen < 50:
        N = 2 ** int(rng.integers(4, 11))
        r = int(rng.integers(2, 32))
        if r >= N or N % r == 0:
            continue
        seen += 1
        for s in (0, int(rng.integers(0, r))):
            w = np.abs(fourier_coefficients_periodic(PeriodicStateSpec(N, r, s))) ** 2
            total = sum(pair_mass(w, N, r, c) for c in range(r))
            assert total >= EIGHT_OVER_PI2
            # pairs overlap when N/r < 2, so also check the union of the pairs
            assert w[near_multiple(np.arange(N), N, r)].sum() >= EIGHT_OVER_PI2


def test_per_multiple_mass_can_fall_below_eight_over_pi2_r():
    # The per-c bound 8/(pi^2 r) needs p close to N/r. Here p r / N = 1.09 and
    # the pair around 3N/r carries about 0.92 of it; the sum over c still clears 8/pi^2.
    N, r = 64, 7
    w = np.abs(fourier_coefficients_periodic(PeriodicStateSpec(N, r, 0))) ** 2
    mass = pair_mass(w, N, r, 3)
    assert mass == pytest.approx(0.748423911632314 / r, abs=1e-12)
    assert mass < EIGHT_OVER_PI2 / r
    assert sum(pair_mass(w, N, r, c) for c in range(r)) >= EIGHT_OVER_PI2


def test_per_multiple_mass_when_r_divides_closely():
    # with N large against r the per-c bound does hold for s = 0
    for r in (3, 5, 6, 7, 11):
        N = 1 << 14
        w = np.abs(fourier_coefficients_periodic(PeriodicStateSpec(N, r, 0))) ** 2
        assert min(pair_mass(w, N, r, c) for c in range(r)) >= 0.99 * EIGHT_OVER_PI2 / r


def test_convergent_examples():
    assert continued_fraction_convergents(0, 16) == [(0, 1)]
    assert continued_fraction_convergents(13, 16) == [(0, 1), (1, 1), (4, 5), (13, 16)]
    assert continued_fraction_convergents(8, 16) == [(0, 1), (1, 2)]
    with pytest.raises(ValueError):
        continued_fraction_convergents(16, 16)


@pytest.mark.parametrize("N", [2**e for e in range(1, 11)])
def test_convergents_match_expansion_oracle(N):
    for j in range(N):
        assert continued_fraction_convergents(j, N) == convergents_exact(j, N)


@pytest.mark.parametrize("N", [2**e for e in range(1, 11)])
def test_convergents_best_approximation(N):
    for j in range(N):
        convs = continued_fraction_convergents(j, N)
        assert Fraction(*convs[-1]) == Fraction(j, N)
        assert [d for _, d in convs] == sorted(d for _, d in convs)
        for c, q in convs:
            if q == 1:
                continue
            b = np.arange(1, q)
            a = np.rint(j * b / N)
            # |j/N - a/b| > |j/N - c/q|, cross-multiplied to stay in integers
            lhs = np.abs(j * b - a * N) * q
            rhs = abs(j * q - c * N) * b
            assert np.all(lhs > rhs), (j, N, c, q)


def test_select_period_examples():
    assert select_period(13, 16, 8)[0] == 5
    assert select_period(4, 16, 8)[0] == 4
    assert select_period(12, 16, 8)[0] == 4
    # j = 8 gives 1/2: the convergent is 1/2, candidate 2 rather than 4
    assert select_period(8, 16, 8)[0] == 2
    assert select_period(0, 16, 8)[0] == 1


def test_select_period_discards_far_candidates():
    # 7/1024 is about 1/146; with R = 10 every allowed convergent is too far
    cand, convs = select_period(7, 1024, 10)
    assert cand is None
    assert convs[-1] == (7, 1024)


def test_period_r4_enumeration():
    rng = np.random.default_rng(3)
    spec = PeriodicStateSpec(16, 4, 0)
    runs = period_finding_runs(perfect_inverse_qft(4), spec, 8, 2000, rng)
    js = np.array([r.outcome_j for r in runs])
    assert set(js.tolist()) <= {0, 4, 8, 12}
    for j in (0, 4, 8, 12):
        assert abs(np.mean(js == j) - 0.25) < 0.04
    for r in runs:
        assert r.success == (r.outcome_j in (4, 12))


def test_period_r5_from_j13():
    rng = np.random.default_rng(4)
    spec = PeriodicStateSpec(16, 5, 0)
    runs = period_finding_runs(perfect_inverse_qft(4), spec, 8, 400, rng)
    hits = [r for r in runs if r.outcome_j == 13]
    assert hits
    for r in hits:
        assert r.convergents == [(0, 1), (1, 1), (4, 5), (13, 16)]
        assert r.candidate_period == 5 and r.success


def test_candidate_period_invariant():
    rng = np.random.default_rng(5)
    spec = PeriodicStateSpec(256, 10, 3)
    for r in period_finding_runs(perfect_inverse_qft(8), spec, 16, 300, rng):
        if r.candidate_period is not None:
            ok = [
                c
                for c, d in r.convergents
                if d == r.candidate_period and abs(Fraction(r.outcome_j, 256) - Fraction(c, d)) <= Fraction(1, 512)
            ]
            assert ok


def test_period_run_validation():
    rng = np.random.default_rng(0)
    spec = PeriodicStateSpec(16, 5, 0)
    with pytest.raises(ValueError):
        period_finding_run(perfect_inverse_qft(4), spec, 4, rng)
    with pytest.raises(ValueError):
        period_finding_run(perfect_inverse_qft(5), spec, 8, rng)
    assert period_finding_run(perfect_inverse_qft(4), spec, 8, rng).sampled_j is not None


def test_near_multiple_predicate():
    N, r = 256, 10
    js = np.arange(N)
    brute = np.array([any(abs(j - c * N / r) < 1 for c in range(r + 1)) for j in js])
    assert np.array_equal(near_multiple(js, N, r), brute)


def test_amplitude_quarter_pi():
    rng = np.random.default_rng(6)
    est = amplitude_estimation(perfect_inverse_qft(10), math.pi / 4, 10, 101, rng)
    assert np.all(np.abs(np.array(est.samples) - 0.25) <= 2 / 1024)
    assert abs(est.mu_hat - math.pi / 4) <= math.pi * 2 / 1024


def test_amplitude_zero():
    rng = np.random.default_rng(7)
    est = amplitude_estimation(perfect_inverse_qft(6), 0.0, 6, 51, rng)
    assert est.mu_hat == 0.0


def test_amplitude_midpoint_good_rate():
    rng = np.random.default_rng(8)
    n, N, k_star = 10, 1024, 200
    mu = math.pi * (k_star + 0.5) / N
    est = amplitude_estimation(perfect_inverse_qft(n), mu, n, 10_000, rng)
    folded = np.array(est.samples)
    good = circular_distance(folded, mu / math.pi) <= 2 / N + 1e-12
    assert abs(good.mean() - (1 - 0.099)) <= 0.01


def test_amplitude_samples_are_folded():
    rng = np.random.default_rng(9)
    est = amplitude_estimation(perfect_inverse_qft(8), 1.2, 8, 201, rng)
    assert all(0 <= s <= 0.5 for s in est.samples)
    assert 0 <= est.mu_hat <= math.pi / 2


def test_amplitude_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        amplitude_estimation(perfect_inverse_qft(4), 2.0, 4, 10, rng)
    with pytest.raises(ValueError):
        amplitude_estimation(perfect_inverse_qft(4), 0.5, 4, 0, rng)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 512), st.integers(2, 10))
def test_fold_merges_mirror_branches(k, n):
    N = 1 << n
    k %= N // 2 + 1
    a, b = k / N, ((N - k) % N) / N
    assert abs(float(fold(a)) - float(fold(b))) <= 1 / N


def test_fold_examples():
    assert fold(0.75) == 0.25
    assert fold(0.5) == 0.5
    assert fold(0.1) == 0.1
    assert fold([0.9, 0.2]).tolist() == pytest.approx([0.1, 0.2])


def test_near_multiple_rate_with_mask_helper():
    # good_mask and near_multiple agree on window width one around cN/r when r divides N
    N, r = 256, 8
    js = np.arange(N)
    via_mask = np.zeros(N, dtype=bool)
    for c in range(r):
        via_mask |= good_mask(js, c / r, 0, 8)
    assert np.array_equal(via_mask, near_multiple(js, N, r))
