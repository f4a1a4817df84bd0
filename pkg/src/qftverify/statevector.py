"""Dense pure-state simulation: gates, QFT circuits, Fourier-basis states.

Qubit 0 is the most significant bit of a basis-state index, so on three
qubits ``|100>`` is index 4. Phases are stored in turns (fractions of a full
rotation) rather than radians.

Internally every routine works on 2-D arrays of shape ``(batch, 2**n)`` so
that many independent shots can be pushed through a circuit at once; the
public single-state API wraps those kernels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_ATOL = 1e-10
MEASURE_NORM_GUARD = 1e-6
MAX_DENSE_QUBITS = 10
MAX_STATE_QUBITS = 24
MAX_QFT_QUBITS = 24


class InvalidGateError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_qubits > MAX_STATE_QUBITS:
            raise InvalidStateError(f"num_qubits must be in [1, {MAX_STATE_QUBITS}]")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << self.num_qubits:
            raise InvalidStateError(
                f"expected {1 << self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        dim = 1 << num_qubits
        if not 0 <= index < dim:
            raise InvalidStateError(f"basis index {index} out of range for {num_qubits} qubits")
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    dim = 1 << num_qubits
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(num_qubits, v / np.linalg.norm(v))


# --------------------------------------------------------------------------
# Gates and circuits
# --------------------------------------------------------------------------


class GateKind(enum.Enum):
    HADAMARD = "H"
    PHASE_ROT = "R"
    CONTROLLED_PHASE_ROT = "CR"
    SWAP = "SWAP"
    SINGLE_QUBIT_PHASE = "P"
    PAULI_X = "X"
    DIAG_PHASE = "D"


_ARITY = {
    GateKind.HADAMARD: 1,
    GateKind.PHASE_ROT: 1,
    GateKind.CONTROLLED_PHASE_ROT: 2,
    GateKind.SWAP: 2,
    GateKind.SINGLE_QUBIT_PHASE: 1,
    GateKind.PAULI_X: 1,
    GateKind.DIAG_PHASE: 1,
}

_INV_SQRT2 = 1.0 / math.sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2


@dataclass(frozen=True)
class Gate:
    """One elementary gate.

    ``PHASE_ROT``/``CONTROLLED_PHASE_ROT`` carry the integer ``s`` of
    ``R_s = diag(1, exp(2*pi*i / 2**s))``. ``SINGLE_QUBIT_PHASE`` is the
    modified Hadamard ``|0> -> (|0> + exp(2*pi*i*phase)|1>)/sqrt(2)``;
    ``DIAG_PHASE`` is the plain ``diag(1, exp(2*pi*i*phase))``.
    ``adjoint`` flips the gate to its inverse.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    s: int = 0
    phase: float = 0.0
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != _ARITY[self.kind]:
            raise InvalidGateError(f"{self.kind.value} acts on {_ARITY[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise InvalidGateError(f"repeated qubit index in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise InvalidGateError(f"negative qubit index in {self.qubits}")
        if self.kind in (GateKind.PHASE_ROT, GateKind.CONTROLLED_PHASE_ROT) and self.s < 1:
            raise InvalidGateError("R_s requires s >= 1")

    def inverse(self) -> "Gate":
        if self.kind in (GateKind.HADAMARD, GateKind.SWAP, GateKind.PAULI_X):
            return self
        return Gate(self.kind, self.qubits, self.s, self.phase, not self.adjoint)

    @property
    def is_phase_rotation(self) -> bool:
        return self.kind in (GateKind.PHASE_ROT, GateKind.CONTROLLED_PHASE_ROT)

    def phase_turns(self) -> float:
        """Signed rotation angle of a diagonal gate, in turns."""
        if self.is_phase_rotation:
            t = 1.0 / (1 << self.s) if self.s < 1024 else 0.0
        else:
            t = self.phase
        return -t if self.adjoint else t

    def matrix(self) -> np.ndarray:
        """Dense 2x2 or 4x4 matrix in the gate's own qubit order."""
        k = self.kind
        if k is GateKind.HADAMARD:
            return _H.copy()
        if k is GateKind.PAULI_X:
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if k is GateKind.SWAP:
            return np.eye(4, dtype=complex)[[0, 2, 1, 3]]
        if k is GateKind.CONTROLLED_PHASE_ROT:
            return np.diag([1, 1, 1, np.exp(2j * np.pi * self.phase_turns())])
        if k in (GateKind.PHASE_ROT, GateKind.DIAG_PHASE):
            return np.diag([1, np.exp(2j * np.pi * self.phase_turns())])
        m = np.diag([1, np.exp(2j * np.pi * self.phase)]) @ _H
        return m.conj().T if self.adjoint else m

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value, "qubits": list(self.qubits)}
        if self.is_phase_rotation:
            d["s"] = self.s
        if self.kind in (GateKind.SINGLE_QUBIT_PHASE, GateKind.DIAG_PHASE):
            d["phase"] = self.phase
        if self.adjoint:
            d["adjoint"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        try:
            kind = GateKind(d["kind"])
        except (KeyError, ValueError) as exc:
            raise InvalidGateError(f"bad gate kind in {d!r}") from exc
        return cls(
            kind,
            tuple(d["qubits"]),
            s=int(d.get("s", 0)),
            phase=float(d.get("phase", 0.0)),
            adjoint=bool(d.get("adjoint", False)),
        )


def hadamard(q: int) -> Gate:
    return Gate(GateKind.HADAMARD, (q,))


def phase_rot(q: int, s: int) -> Gate:
    return Gate(GateKind.PHASE_ROT, (q,), s=s)


def controlled_phase_rot(control: int, target: int, s: int) -> Gate:
    return Gate(GateKind.CONTROLLED_PHASE_ROT, (control, target), s=s)


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, (a, b))


def single_qubit_phase(q: int, phase: float) -> Gate:
    return Gate(GateKind.SINGLE_QUBIT_PHASE, (q,), phase=phase)


def diag_phase(q: int, phase: float) -> Gate:
    return Gate(GateKind.DIAG_PHASE, (q,), phase=phase)


def pauli_x(q: int) -> Gate:
    return Gate(GateKind.PAULI_X, (q,))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            _check_gate(g, self.num_qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def then(self, other: "Circuit | Iterable[Gate]") -> "Circuit":
        """This circuit followed by ``other``."""
        extra = other.gates if isinstance(other, Circuit) else tuple(other)
        return Circuit(self.num_qubits, self.gates + tuple(extra))

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def to_dict(self) -> dict:
        return {"num_qubits": self.num_qubits, "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        """Build from an explicit gate list or a named builder.

        Builders: ``{"builder": "qft" | "inverse_qft", "n": n}`` and
        ``{"builder": "approx_qft" | "inverse_approx_qft", "n": n, "cutoff_c": c}``,
        optionally with ``"append": [gate, ...]`` applied afterwards.
        ``"num_qubits"`` is accepted in place of ``"n"``.
        """
        if "builder" in d:
            name, n = d["builder"], int(d["n"] if "n" in d else d["num_qubits"])
            if name == "qft":
                base = qft_circuit(n)
            elif name == "inverse_qft":
                base = qft_circuit(n).inverse()
            elif name == "approx_qft":
                base = approx_qft_circuit(n, float(d["cutoff_c"]))
            elif name == "inverse_approx_qft":
                base = approx_qft_circuit(n, float(d["cutoff_c"])).inverse()
            else:
                raise ValueError(f"unknown circuit builder {name!r}")
        else:
            base = cls(int(d["num_qubits"]), tuple(Gate.from_dict(g) for g in d.get("gates", [])))
        extra = [Gate.from_dict(g) for g in d.get("append", [])]
        return base.then(extra) if extra else base


def _check_gate(gate: Gate, num_qubits: int) -> None:
    for q in gate.qubits:
        if q >= num_qubits:
            raise InvalidGateError(f"qubit {q} out of range for {num_qubits} qubits")


# --------------------------------------------------------------------------
# Batched kernels
# --------------------------------------------------------------------------


def _apply_hadamard(amps: np.ndarray, n: int, q: int) -> None:
    view = amps.reshape(amps.shape[0], 1 << q, 2, 1 << (n - q - 1))
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    total = a0 + a1
    total *= _INV_SQRT2
    np.subtract(a0, a1, out=a1)
    a1 *= _INV_SQRT2
    a0[...] = total


def _apply_1q_matrix(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    b = amps.shape[0]
    view = amps.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    new1 = m[1, 0] * a0 + m[1, 1] * a1
    view[:, :, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    view[:, :, 1, :] = new1


def _pair_view(amps: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    lo, hi = min(a, b), max(a, b)
    return amps.reshape(
        amps.shape[0], 1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1)
    )


def _row_factor(factor, ndim: int):
    if np.ndim(factor) == 0:
        return factor
    return np.asarray(factor).reshape((-1,) + (1,) * (ndim - 1))


def _apply_gate_batch(amps: np.ndarray, n: int, gate: Gate, factor=None) -> None:
    """Apply ``gate`` in place to every row of ``amps``.

    ``factor`` overrides the phase factor of a diagonal gate; it may be a
    scalar or one complex number per row.
    """
    k = gate.kind
    if k in (GateKind.PHASE_ROT, GateKind.DIAG_PHASE):
        if factor is None:
            factor = np.exp(2j * np.pi * gate.phase_turns())
        q = gate.qubits[0]
        view = amps.reshape(amps.shape[0], 1 << q, 2, 1 << (n - q - 1))
        view[:, :, 1, :] *= _row_factor(factor, 3)
    elif k is GateKind.CONTROLLED_PHASE_ROT:
        if factor is None:
            factor = np.exp(2j * np.pi * gate.phase_turns())
        view = _pair_view(amps, n, *gate.qubits)
        view[:, :, 1, :, 1, :] *= _row_factor(factor, 4)
    elif k is GateKind.SWAP:
        view = _pair_view(amps, n, *gate.qubits)
        tmp = view[:, :, 0, :, 1, :].copy()
        view[:, :, 0, :, 1, :] = view[:, :, 1, :, 0, :]
        view[:, :, 1, :, 0, :] = tmp
    elif k is GateKind.PAULI_X:
        q = gate.qubits[0]
        view = amps.reshape(amps.shape[0], 1 << q, 2, 1 << (n - q - 1))
        view[:, :, ::-1, :] = view.copy()
    elif k is GateKind.HADAMARD:
        _apply_hadamard(amps, n, gate.qubits[0])
    else:
        _apply_1q_matrix(amps, n, gate.qubits[0], gate.matrix())


def run_circuit_batch(
    circuit: Circuit, amps: np.ndarray, phase_factors: Sequence | None = None
) -> np.ndarray:
    """Apply ``circuit`` to each row of ``amps`` (shape ``(batch, 2**n)``).

    Returns a new array. ``phase_factors`` optionally gives, per gate, a
    replacement phase factor (scalar or per-row array) or ``None``.
    """
    n = circuit.num_qubits
    out = np.array(amps, dtype=complex, copy=True, order="C")
    if out.ndim != 2 or out.shape[1] != 1 << n:
        raise InvalidStateError(f"expected shape (batch, {1 << n}), got {out.shape}")
    for i, gate in enumerate(circuit.gates):
        f = None if phase_factors is None else phase_factors[i]
        _apply_gate_batch(out, n, gate, f)
    return out


def sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of a (batch, m) nonnegative weight matrix."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    idx = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


# --------------------------------------------------------------------------
# Public single-state operations
# --------------------------------------------------------------------------


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_gate(gate, state.num_qubits)
    amps = state.amplitudes.reshape(1, -1).copy()
    _apply_gate_batch(amps, state.num_qubits, gate)
    return StateVector(state.num_qubits, amps[0])


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.num_qubits != state.num_qubits:
        raise InvalidStateError("circuit and state qubit counts differ")
    out = run_circuit_batch(circuit, state.amplitudes.reshape(1, -1))
    return StateVector(state.num_qubits, out[0])


def qft_circuit(n: int) -> Circuit:
    """Exact textbook QFT: n Hadamards, n(n-1)/2 controlled R_s, final swaps."""
    if not 1 <= n <= MAX_QFT_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QFT_QUBITS}], got {n}")
    gates: list[Gate] = []
    for q in range(n):
        gates.append(hadamard(q))
        for c in range(q + 1, n):
            gates.append(controlled_phase_rot(c, q, c - q + 1))
    for q in range(n // 2):
        gates.append(swap(q, n - 1 - q))
    return Circuit(n, tuple(gates))


def approx_qft_circuit(n: int, cutoff_c: float) -> Circuit:
    """QFT with every controlled R_s for s > cutoff_c * log2(n) removed."""
    if n < 2:
        raise ValueError("approximate QFT needs n >= 2")
    if not cutoff_c > 0:
        raise ValueError("cutoff_c must be positive")
    limit = cutoff_c * math.log2(n)
    kept = tuple(g for g in qft_circuit(n).gates if not (g.is_phase_rotation and g.s > limit))
    return Circuit(n, kept)


def inverse_qft_circuit(n: int) -> Circuit:
    return qft_circuit(n).inverse()


def dft_matrix(n: int) -> np.ndarray:
    """Dense F_N with entries omega^(jk)/sqrt(N), exponent reduced mod N."""
    if not 1 <= n <= MAX_DENSE_QUBITS:
        raise ValueError(f"dense path is capped at {MAX_DENSE_QUBITS} qubits")
    dim = 1 << n
    j = np.arange(dim)
    return np.exp(2j * np.pi * (np.outer(j, j) % dim) / dim) / math.sqrt(dim)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense path is capped at {MAX_DENSE_QUBITS} qubits")
    # row j of the output is U|j>, i.e. column j of U
    return run_circuit_batch(circuit, np.eye(1 << n, dtype=complex)).T


def operator_distance(c1: Circuit, c2: Circuit) -> float:
    """Spectral norm of U1 - U2 (largest singular value)."""
    if c1.num_qubits != c2.num_qubits:
        raise ValueError("circuits act on different numbers of qubits")
    diff = circuit_unitary(c1) - circuit_unitary(c2)
    return float(np.linalg.norm(diff, 2))


def _round_turns(phase: np.ndarray | float, bits: int | None):
    if bits is None:
        return phase
    scale = float(1 << bits)
    return np.round(np.asarray(phase) * scale) / scale


def fourier_qubit_phases(n: int, k) -> np.ndarray:
    """Turns of each qubit in the product form of |k^>, shape (..., n).

    Qubit l (0-based, most significant first) carries k / 2**(l+1) mod 1.
    """
    k = np.asarray(k, dtype=np.int64)
    ell = np.arange(1, n + 1, dtype=np.int64)
    # k mod 2**l is exact in integers; divide afterwards
    return (k[..., None] % (1 << ell)) / (1 << ell).astype(float)


def product_state_batch(qubit_turns: np.ndarray) -> np.ndarray:
    """Rows of tensor products of (|0> + exp(2 pi i t)|1>)/sqrt(2)."""
    turns = np.atleast_2d(qubit_turns)
    b, n = turns.shape
    out = np.ones((b, 1), dtype=complex)
    for q in range(n):
        qubit = np.stack([np.ones(b), np.exp(2j * np.pi * turns[:, q])], axis=1) / math.sqrt(2)
        out = (out[:, :, None] * qubit[:, None, :]).reshape(b, -1)
    return out


def prepare_fourier_basis_state(n: int, k: int, precision_bits: int | None = None) -> StateVector:
    """|k^> = F_N|k>, prepared from |0...0> with one modified Hadamard per qubit.

    ``precision_bits`` rounds each qubit's phase to that many bits.
    """
    dim = 1 << n
    if not 0 <= k < dim:
        raise ValueError(f"k={k} out of range [0, {dim})")
    turns = _round_turns(fourier_qubit_phases(n, k), precision_bits)
    circuit = Circuit(n, tuple(single_qubit_phase(q, float(turns[q])) for q in range(n)))
    return apply_circuit(StateVector.basis(n, 0), circuit)


def fourier_basis_batch(n: int, ks) -> np.ndarray:
    """Rows |k^> for each k in ``ks``, via the product form."""
    return product_state_batch(fourier_qubit_phases(n, np.atleast_1d(ks)))


def phase_state_batch(n: int, phases) -> np.ndarray:
    """Rows with amplitude exp(2 pi i j phase)/sqrt(N) for each phase."""
    dim = 1 << n
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    j = np.arange(dim, dtype=float)
    t = np.mod(np.outer(phases, j), 1.0)
    return np.exp(2j * np.pi * t) / math.sqrt(dim)


def offset_phase_state_batch(n: int, theta, offsets) -> np.ndarray:
    """Rows exp(2 pi i j (theta + lam/N))/sqrt(N), lam an integer offset.

    Built as a product state: qubit q carries 2**(n-1-q) (theta + lam/N)
    turns, which is what replacing each initial Hadamard by a phased one
    produces. The offset part is reduced mod N in integers so n-bit phases
    stay exact.
    """
    dim = 1 << n
    offsets = np.atleast_1d(np.asarray(offsets, dtype=np.int64))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), offsets.shape)
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    turns = np.mod(theta[:, None] * weights.astype(float), 1.0)
    turns = turns + ((offsets[:, None] * weights) % dim) / dim
    return product_state_batch(np.mod(turns, 1.0))


def prepare_phase_state(n: int, phase: float) -> StateVector:
    if not 0 <= phase < 1:
        raise ValueError("phase must lie in [0, 1)")
    return StateVector(n, phase_state_batch(n, phase)[0])


def measure_computational(state: StateVector, rng: np.random.Generator) -> int:
    probs = state.probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > MEASURE_NORM_GUARD:
        raise InvalidStateError(f"state norm^2 is {total}, not 1")
    return int(sample_rows(probs.reshape(1, -1), rng)[0])


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError("states have different dimensions")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(f, 0.0), 1.0))
