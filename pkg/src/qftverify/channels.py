"""Purported inverse-QFT implementations, honest and otherwise.

Every channel is a mixture of pure-state maps, so one "shot" returns one
sampled pure output state. The exact output distribution in the
computational basis is available for every variant except ``PerGateNoise``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .statevector import (
    Circuit,
    StateVector,
    fourier_basis_batch,
    inverse_qft_circuit,
    run_circuit_batch,
    sample_rows,
)

MAX_EXACT_QUBITS = 14
# amplitudes held in one working block; bounds memory during batched runs
BLOCK_ELEMENTS = 1 << 21


def row_chunks(total: int, dim: int):
    """Yield (start, stop) slices so each block holds about BLOCK_ELEMENTS amplitudes."""
    step = max(1, BLOCK_ELEMENTS // dim)
    for start in range(0, total, step):
        yield start, min(total, start + step)


@dataclass(frozen=True)
class ExactUnitary:
    circuit: Circuit

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    def shots(self, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return run_circuit_batch(self.circuit, amps)

    def output_probabilities(self, amps: np.ndarray) -> np.ndarray:
        return np.abs(run_circuit_batch(self.circuit, amps)) ** 2

    def to_dict(self) -> dict:
        return {"variant": "exact_unitary", "circuit": self.circuit.to_dict()}


@dataclass(frozen=True)
class StochasticMixture:
    """Apply ``circuit_i`` with probability ``p_i``, independently per shot."""

    branches: tuple[tuple[float, Circuit], ...]

    def __post_init__(self):
        branches = tuple((float(p), c) for p, c in self.branches)
        if not branches:
            raise ValueError("mixture needs at least one branch")
        probs = np.array([p for p, _ in branches])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"branch probabilities must be >= 0 and sum to 1, got {probs}")
        if len({c.num_qubits for _, c in branches}) != 1:
            raise ValueError("all branches must act on the same number of qubits")
        object.__setattr__(self, "branches", branches)

    @property
    def num_qubits(self) -> int:
        return self.branches[0][1].num_qubits

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.branches])

    def shots(self, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        choice = sample_rows(np.broadcast_to(self.probabilities, (amps.shape[0], len(self.branches))), rng)
        out = np.empty_like(amps, dtype=complex)
        for i, (_, circ) in enumerate(self.branches):
            rows = np.flatnonzero(choice == i)
            if rows.size:
                out[rows] = run_circuit_batch(circ, amps[rows])
        return out

    def output_probabilities(self, amps: np.ndarray) -> np.ndarray:
        total = np.zeros(amps.shape, dtype=float)
        for p, circ in self.branches:
            if p > 0:
                total += p * np.abs(run_circuit_batch(circ, amps)) ** 2
        return total

    def to_dict(self) -> dict:
        return {
            "variant": "stochastic_mixture",
            "branches": [{"probability": p, "circuit": c.to_dict()} for p, c in self.branches],
        }


@dataclass(frozen=True)
class AdversarialFourierCorruptor:
    """Perfect inverse QFT except on a set of Fourier basis states.

    ``|k^>`` for ``k`` in the bad set is sent to ``|remap[k]>``. On a
    superposition the input is split into its good-subspace part (which
    gets the perfect inverse QFT) and one branch per bad ``k``; a single
    branch is chosen with probability equal to its squared norm.
    """

    num_qubits: int
    remap: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        dim = 1 << self.num_qubits
        remap = {int(k): int(v) for k, v in dict(self.remap).items()}
        for k, v in remap.items():
            if not (0 <= k < dim and 0 <= v < dim):
                raise ValueError(f"remap entry {k}->{v} out of range")
            if k == v:
                raise ValueError(f"remap must be fixed-point free, got {k}->{v}")
        if len(set(remap.values())) != len(remap):
            raise ValueError("remap must be injective")
        object.__setattr__(self, "remap", dict(sorted(remap.items())))

    @property
    def bad_set(self) -> frozenset[int]:
        return frozenset(self.remap)

    def _split(self, amps: np.ndarray):
        dim = 1 << self.num_qubits
        # <k^|psi> = fft(psi)[k] / sqrt(N)
        coeffs = np.fft.fft(amps, axis=1) / math.sqrt(dim)
        bad = np.fromiter(self.remap.keys(), dtype=np.int64, count=len(self.remap))
        targets = np.fromiter(self.remap.values(), dtype=np.int64, count=len(self.remap))
        good = coeffs.copy()
        good[:, bad] = 0.0
        return coeffs, good, bad, targets

    def shots(self, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        coeffs, good, bad, targets = self._split(amps)
        weights = np.concatenate(
            [np.sum(np.abs(good) ** 2, axis=1, keepdims=True), np.abs(coeffs[:, bad]) ** 2], axis=1
        )
        branch = sample_rows(weights, rng)
        out = np.zeros_like(amps, dtype=complex)
        g = np.flatnonzero(branch == 0)
        if g.size:
            out[g] = good[g] / np.linalg.norm(good[g], axis=1, keepdims=True)
        b = np.flatnonzero(branch > 0)
        if b.size:
            out[b, targets[branch[b] - 1]] = 1.0
        return out

    def output_probabilities(self, amps: np.ndarray) -> np.ndarray:
        coeffs, good, bad, targets = self._split(amps)
        probs = np.abs(good) ** 2
        probs[:, targets] += np.abs(coeffs[:, bad]) ** 2
        return probs

    def to_dict(self) -> dict:
        return {
            "variant": "adversarial_fourier_corruptor",
            "num_qubits": self.num_qubits,
            "remap": [[k, v] for k, v in sorted(self.remap.items())],
        }


@dataclass(frozen=True)
class PerGateNoise:
    """Per shot, every (controlled) R_s gate of ``template`` is dropped with
    ``drop_probability`` or else over-rotated by Gaussian noise of standard
    deviation ``over_rotation_stddev`` turns. Other gates are exact."""

    template: Circuit
    over_rotation_stddev: float = 0.0
    drop_probability: float = 0.0

    def __post_init__(self):
        if self.over_rotation_stddev < 0:
            raise ValueError("over_rotation_stddev must be >= 0")
        if not 0 <= self.drop_probability <= 1:
            raise ValueError("drop_probability must lie in [0, 1]")

    @property
    def num_qubits(self) -> int:
        return self.template.num_qubits

    def shots(self, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        b = amps.shape[0]
        gates = self.template.gates
        noisy = [i for i, g in enumerate(gates) if g.is_phase_rotation]
        drops = rng.random((len(noisy), b)) < self.drop_probability
        kicks = rng.normal(0.0, self.over_rotation_stddev, (len(noisy), b))
        factors: list = [None] * len(gates)
        for row, i in enumerate(noisy):
            turns = gates[i].phase_turns() + kicks[row]
            factors[i] = np.where(drops[row], 1.0 + 0j, np.exp(2j * np.pi * turns))
        return run_circuit_batch(self.template, amps, factors)

    def output_probabilities(self, amps: np.ndarray) -> np.ndarray:
        raise NotImplementedError("per-gate noise has no exact output distribution; sample it")

    def to_dict(self) -> dict:
        return {
            "variant": "per_gate_noise",
            "template": self.template.to_dict(),
            "over_rotation_stddev": self.over_rotation_stddev,
            "drop_probability": self.drop_probability,
        }


Channel = Union[ExactUnitary, StochasticMixture, AdversarialFourierCorruptor, PerGateNoise]


def perfect_inverse_qft(n: int) -> ExactUnitary:
    return ExactUnitary(inverse_qft_circuit(n))


@dataclass(frozen=True)
class PerBasisInfidelity:
    n: int
    eta_k: np.ndarray = field(repr=False)
    eta_avg: float = 0.0
    shots_per_state: int | None = None

    @classmethod
    def from_array(cls, n: int, eta_k: np.ndarray, shots_per_state: int | None = None):
        eta_k = np.clip(np.asarray(eta_k, dtype=float), 0.0, 1.0)
        return cls(n, eta_k, math.fsum(eta_k) / eta_k.size, shots_per_state)


def _check_dims(channel: Channel, amps: np.ndarray) -> None:
    if amps.shape[-1] != 1 << channel.num_qubits:
        raise ValueError(
            f"state dimension {amps.shape[-1]} does not match a {channel.num_qubits}-qubit channel"
        )


def channel_shots(channel: Channel, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One independent channel realization per row of ``amps``."""
    amps = np.atleast_2d(amps)
    _check_dims(channel, amps)
    out = np.empty(amps.shape, dtype=complex)
    for lo, hi in row_chunks(amps.shape[0], amps.shape[1]):
        out[lo:hi] = channel.shots(amps[lo:hi], rng)
    return out


def sample_outcomes(channel: Channel, amps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Apply one channel shot to each row and measure it in the computational basis."""
    amps = np.atleast_2d(amps)
    _check_dims(channel, amps)
    out = np.empty(amps.shape[0], dtype=np.int64)
    for lo, hi in row_chunks(amps.shape[0], amps.shape[1]):
        states = channel.shots(amps[lo:hi], rng)
        out[lo:hi] = sample_rows(np.abs(states) ** 2, rng)
    return out


def output_distribution(channel: Channel, amps: np.ndarray) -> np.ndarray:
    """Exact computational-basis outcome probabilities, one row per input row."""
    amps = np.atleast_2d(amps)
    _check_dims(channel, amps)
    out = np.empty(amps.shape, dtype=float)
    for lo, hi in row_chunks(amps.shape[0], amps.shape[1]):
        out[lo:hi] = channel.output_probabilities(amps[lo:hi])
    return out


def apply_channel_shot(channel: Channel, state: StateVector, rng: np.random.Generator) -> StateVector:
    _check_dims(channel, state.amplitudes)
    out = channel.shots(state.amplitudes.reshape(1, -1), rng)[0]
    return StateVector(state.num_qubits, out)


def exact_per_basis_infidelity(
    channel: Channel,
    shots_per_state: int | None = None,
    rng: np.random.Generator | None = None,
) -> PerBasisInfidelity:
    """eta_k = 1 - <k| C(|k^>) |k> for every k.

    ``PerGateNoise`` has no closed form; for it ``shots_per_state`` and
    ``rng`` are required and each eta_k is a failure frequency.
    """
    n = channel.num_qubits
    if n > MAX_EXACT_QUBITS:
        raise ValueError(f"exhaustive evaluation is capped at {MAX_EXACT_QUBITS} qubits")
    dim = 1 << n
    if isinstance(channel, AdversarialFourierCorruptor):
        eta = np.zeros(dim)
        eta[list(channel.bad_set)] = 1.0
        return PerBasisInfidelity.from_array(n, eta)
    if isinstance(channel, StochasticMixture):
        eta = np.zeros(dim)
        for p, circ in channel.branches:
            if p > 0:
                eta += p * exact_per_basis_infidelity(ExactUnitary(circ)).eta_k
        return PerBasisInfidelity.from_array(n, eta)
    if isinstance(channel, ExactUnitary):
        eta = np.empty(dim)
        for lo, hi in row_chunks(dim, dim):
            ks = np.arange(lo, hi)
            out = run_circuit_batch(channel.circuit, fourier_basis_batch(n, ks))
            eta[lo:hi] = 1.0 - np.abs(out[np.arange(hi - lo), ks]) ** 2
        return PerBasisInfidelity.from_array(n, eta)
    if isinstance(channel, PerGateNoise):
        if shots_per_state is None or shots_per_state < 1 or rng is None:
            raise ValueError("per-gate noise needs shots_per_state >= 1 and an rng")
        ks = np.repeat(np.arange(dim), shots_per_state)
        fails = np.zeros(dim)
        for lo, hi in row_chunks(ks.size, dim):
            outcomes = sample_outcomes(channel, fourier_basis_batch(n, ks[lo:hi]), rng)
            np.add.at(fails, ks[lo:hi], outcomes != ks[lo:hi])
        return PerBasisInfidelity.from_array(n, fails / shots_per_state, shots_per_state)
    raise TypeError(f"not a channel: {type(channel).__name__}")


# --------------------------------------------------------------------------
# JSON documents
# --------------------------------------------------------------------------


def channel_to_dict(channel: Channel) -> dict:
    return channel.to_dict()


def channel_from_dict(d: dict) -> Channel:
    try:
        variant = d["variant"]
    except KeyError:
        raise ValueError("channel document needs a 'variant' field") from None
    if variant == "perfect":
        return perfect_inverse_qft(int(d["num_qubits"]))
    if variant == "exact_unitary":
        return ExactUnitary(Circuit.from_dict(d["circuit"]))
    if variant == "stochastic_mixture":
        return StochasticMixture(
            tuple((float(b["probability"]), Circuit.from_dict(b["circuit"])) for b in d["branches"])
        )
    if variant == "adversarial_fourier_corruptor":
        return AdversarialFourierCorruptor(int(d["num_qubits"]), {int(k): int(v) for k, v in d["remap"]})
    if variant == "per_gate_noise":
        return PerGateNoise(
            Circuit.from_dict(d["template"]),
            float(d.get("over_rotation_stddev", 0.0)),
            float(d.get("drop_probability", 0.0)),
        )
    raise ValueError(f"unknown channel variant {variant!r}")


def dumps_channel(channel: Channel) -> str:
    return json.dumps(channel_to_dict(channel), sort_keys=True)


def loads_channel(text: str) -> Channel:
    return channel_from_dict(json.loads(text))


def contiguous_corruptor(n: int, bad: range | list[int], shift: int = 1) -> AdversarialFourierCorruptor:
    """Corruptor sending |k^> to |k + shift mod N> for every k in ``bad``."""
    dim = 1 << n
    if shift % dim == 0:
        raise ValueError("shift must be nonzero mod N")
    return AdversarialFourierCorruptor(n, {k % dim: (k + shift) % dim for k in bad})
