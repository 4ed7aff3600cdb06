"""Gate instructions, circuits and their execution against a StateVector."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .statevector import (
    StateVector,
    apply_1q,
    apply_2q_diagonal,
    apply_controlled,
    bitstring,
)

# gate name -> (number of qubits, takes a parameter)
GATE_SPECS = {
    "h": (1, False),
    "x": (1, False),
    "ry": (1, True),
    "cnot": (2, False),
    "toffoli": (3, False),
    "zz": (2, True),
    "xrot": (1, True),
    "flip": (1, True),
}

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    """One instruction. ``qubits`` lists controls before the target."""

    name: str
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        if self.name not in GATE_SPECS:
            raise ValidationError(f"unknown gate {self.name!r}")
        arity, has_param = GATE_SPECS[self.name]
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != arity:
            raise ValidationError(f"{self.name} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != arity:
            raise ValidationError(f"{self.name} qubit indices must be distinct: {self.qubits}")
        if min(self.qubits) < 0:
            raise ValidationError(f"negative qubit index in {self.qubits}")
        if has_param != (self.param is not None):
            raise ValidationError(f"{self.name}: parameter {'required' if has_param else 'not allowed'}")
        if has_param:
            object.__setattr__(self, "param", float(self.param))
            if not np.isfinite(self.param):
                raise ValidationError(f"{self.name}: non-finite parameter")
        if self.name == "flip" and not 0.0 <= self.param <= 1.0:
            raise ValidationError(f"flip probability {self.param} outside [0, 1]")

    @property
    def is_noise(self) -> bool:
        return self.name == "flip"

    def to_dict(self) -> dict:
        return {"gate": self.name, "qubits": list(self.qubits), "param": self.param}

    @classmethod
    def from_dict(cls, d: dict) -> Gate:
        try:
            return cls(d["gate"], tuple(d["qubits"]), d.get("param"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instruction {d!r}") from exc


def H(q: int) -> Gate:
    return Gate("h", (q,))


def X(q: int) -> Gate:
    return Gate("x", (q,))


def Ry(theta: float, q: int) -> Gate:
    return Gate("ry", (q,), theta)


def CNOT(control: int, target: int) -> Gate:
    return Gate("cnot", (control, target))


def Toffoli(c1: int, c2: int, target: int) -> Gate:
    return Gate("toffoli", (c1, c2, target))


def ZZ(gamma: float, q1: int, q2: int) -> Gate:
    return Gate("zz", (q1, q2), gamma)


def XRot(beta: float, q: int) -> Gate:
    return Gate("xrot", (q,), beta)


def FlipSite(p: float, q: int) -> Gate:
    return Gate("flip", (q,), p)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        for g in self.instructions:
            if max(g.qubits) >= self.n_qubits:
                raise ValidationError(f"{g} exceeds circuit width {self.n_qubits}")

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    @property
    def flip_sites(self) -> list[int]:
        """Instruction positions of the FlipSite gates."""
        return [k for k, g in enumerate(self.instructions) if g.is_noise]

    def to_json(self) -> str:
        return json.dumps([g.to_dict() for g in self.instructions])

    @classmethod
    def from_json(cls, n_qubits: int, text: str) -> Circuit:
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValidationError("circuit JSON must be an array of instructions")
        return cls(n_qubits, tuple(Gate.from_dict(d) for d in data))


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense unitary; multi-qubit gates use the big-endian order of ``gate.qubits``."""
    name, t = gate.name, gate.param
    if name == "flip":
        raise ValidationError("FlipSite is a noise channel and has no fixed matrix")
    if name == "h":
        return _H.copy()
    if name == "x":
        return _X.copy()
    if name == "ry":
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if name == "xrot":
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)
    if name == "zz":
        return np.diag(_zz_phases(t))
    # controlled-X family: X on the last qubit when all leading qubits are 1
    dim = 1 << len(gate.qubits)
    u = np.eye(dim, dtype=np.complex128)
    u[[dim - 2, dim - 1]] = u[[dim - 1, dim - 2]]
    return u


def _zz_phases(gamma: float) -> np.ndarray:
    e = np.exp(1j * gamma)
    return np.array([e, e.conjugate(), e.conjugate(), e], dtype=np.complex128)


def apply_gate(state: StateVector, gate: Gate, validate: bool = False) -> None:
    name, q = gate.name, gate.qubits
    if name in ("h", "x", "ry", "xrot"):
        apply_1q(state, q[0], gate_matrix(gate), validate)
    elif name in ("cnot", "toffoli"):
        apply_controlled(state, q[:-1], q[-1], _X, validate)
    elif name == "zz":
        apply_2q_diagonal(state, q[0], q[1], _zz_phases(gate.param), validate)
    else:
        raise ValidationError(f"cannot apply {name} as a unitary")


@dataclass(frozen=True)
class Trajectory:
    """Noise mode: one stochastic flip pattern drawn from ``seed``."""

    seed: int


def run_with_flips(
    circuit: Circuit,
    state: StateVector,
    flips: Sequence[bool] = (),
    validate: bool = False,
) -> StateVector:
    """Run ``circuit`` on a copy of ``state``; the k-th FlipSite applies X iff ``flips[k]``.

    Missing entries in ``flips`` mean no flip.
    """
    if state.n_qubits != circuit.n_qubits:
        raise ValidationError(
            f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}"
        )
    out = state.copy()
    site = 0
    for g in circuit.instructions:
        if g.is_noise:
            if site < len(flips) and flips[site]:
                apply_1q(out, g.qubits[0], _X)
            site += 1
        else:
            apply_gate(out, g, validate)
    return out


def run_circuit(
    circuit: Circuit,
    state: StateVector,
    noise: Trajectory | None = None,
    validate: bool = False,
) -> StateVector:
    """Execute ``circuit`` in order; ideal mode (``noise=None``) skips FlipSites."""
    if noise is None:
        return run_with_flips(circuit, state, (), validate)
    rng = np.random.default_rng(noise.seed)
    probs = [circuit.instructions[k].param for k in circuit.flip_sites]
    flips = rng.random(len(probs)) < np.asarray(probs, dtype=float)
    return run_with_flips(circuit, state, flips.tolist(), validate)


def sample_trajectories(
    circuit: Circuit, state: StateVector, shots: int, seed: int
) -> dict[str, int]:
    """Sampled counts with one independent flip pattern per shot.

    Shots sharing a flip pattern are simulated once and their outcomes drawn
    together, which is equivalent in distribution to per-shot simulation.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    probs = np.asarray([circuit.instructions[k].param for k in circuit.flip_sites], dtype=float)
    patterns = rng.random((shots, probs.size)) < probs
    uniq, multiplicity = np.unique(patterns, axis=0, return_counts=True)
    total = np.zeros(1 << circuit.n_qubits, dtype=np.int64)
    for pattern, m in zip(uniq, multiplicity):
        out = run_with_flips(circuit, state, pattern.tolist())
        p = np.abs(out.amplitudes) ** 2
        total += rng.multinomial(int(m), p / p.sum())
    n = circuit.n_qubits
    return {bitstring(int(k), n): int(total[k]) for k in np.flatnonzero(total)}


def embed(gate: Gate, n_qubits: int) -> np.ndarray:
    """Full ``2**n x 2**n`` matrix of ``gate`` acting inside an n-qubit register."""
    u = gate_matrix(gate)
    k = len(gate.qubits)
    dim = 1 << n_qubits
    pos = [n_qubits - 1 - q for q in gate.qubits]
    full = np.zeros((dim, dim), dtype=np.complex128)
    rest_mask = ~sum(1 << p for p in pos)
    for col in range(dim):
        sub_in = 0
        for p in pos:
            sub_in = (sub_in << 1) | ((col >> p) & 1)
        base = col & rest_mask
        for sub_out in range(1 << k):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            row = base
            for j, p in enumerate(pos):
                row |= ((sub_out >> (k - 1 - j)) & 1) << p
            full[row, col] += amp
    return full


def circuit_matrix(circuit: Circuit) -> np.ndarray:
    if circuit.n_qubits > 10:
        raise ValidationError("dense circuit matrix limited to 10 qubits")
    if circuit.flip_sites:
        raise ValidationError("circuit contains noise instructions")
    dim = 1 << circuit.n_qubits
    total = np.eye(dim, dtype=np.complex128)
    for g in circuit.instructions:
        total = embed(g, circuit.n_qubits) @ total
    return total


def circuit_unitary_check(circuit: Circuit) -> float:
    """Max entry of ``|U^dag U - I|`` for the dense product matrix of ``circuit``."""
    u = circuit_matrix(circuit)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())

