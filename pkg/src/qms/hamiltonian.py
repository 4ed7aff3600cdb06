"""Continuous-time check of the tree circuit.

Evolves the three-body exchange Hamiltonian of the tree network under a
piecewise-constant pulse schedule and compares populations with the gate
circuit. Ladder convention: sigma_plus = |1><0| excites, sigma_minus =
|0><1| de-excites; sigma_Z|0> = +|0>. Units hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .gates import Ry, run_with_flips, Circuit
from .statevector import StateVector, zero_state
from .tree import TreeConfig, build_tree_circuit

MAX_DENSE_DIM = 1 << 7


@dataclass(frozen=True)
class TreeHamiltonianSpec:
    n_layers: int
    g: float = 1.0
    omegas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValidationError("a tree needs at least 2 layers")
        if not self.g > 0:
            raise ValidationError("coupling g must be positive")
        if self.omegas is not None:
            object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
            if len(self.omegas) != self.n_qubits:
                raise ValidationError(f"need {self.n_qubits} transition frequencies")

    @property
    def n_qubits(self) -> int:
        return (1 << self.n_layers) - 1

    @property
    def tau(self) -> float:
        """Duration of a full transfer pulse."""
        return np.pi / (2.0 * self.g)

    def blocks(self, layer: int) -> list[tuple[int, int, int]]:
        """(parent, left, right) couplings driven when ``layer`` is active."""
        if not 1 <= layer < self.n_layers:
            raise ValidationError(f"active layer must be in 1..{self.n_layers - 1}, got {layer}")
        first, last = (1 << (layer - 1)) - 1, (1 << layer) - 1
        return [(i, 2 * i + 1, 2 * i + 2) for i in range(first, last)]


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(
            self, "segments", tuple((int(a), float(d)) for a, d in self.segments)
        )
        for layer, duration in self.segments:
            if not duration > 0:
                raise ValidationError(f"segment duration must be positive, got {duration}")

    @classmethod
    def default(cls, spec: TreeHamiltonianSpec) -> PulseSchedule:
        """One transfer pulse per layer, in order."""
        return cls(tuple((layer, spec.tau) for layer in range(1, spec.n_layers)))


def _diagonal(spec: TreeHamiltonianSpec, dim: int) -> np.ndarray | None:
    if spec.omegas is None or not any(spec.omegas):
        return None
    n = spec.n_qubits
    idx = np.arange(dim)
    diag = np.zeros(dim)
    for q, w in enumerate(spec.omegas):
        z = 1 - 2 * ((idx >> (n - 1 - q)) & 1)
        diag += 0.5 * w * z
    return diag


def apply_hamiltonian(
    spec: TreeHamiltonianSpec, active_layer: int, state: StateVector
) -> StateVector:
    """Return H|state> for the couplings of ``active_layer`` plus the Z terms."""
    n = spec.n_qubits
    if state.n_qubits != n:
        raise ValidationError(f"state has {state.n_qubits} qubits, tree has {n}")
    a = state.amplitudes
    out = np.zeros_like(a)
    diag = _diagonal(spec, a.size)
    if diag is not None:
        out += diag * a
    idx = np.arange(a.size)
    for p, l, r in spec.blocks(active_layer):
        bp, bl, br = (1 << (n - 1 - q) for q in (p, l, r))
        trio = bp | bl | br
        # |1>_p|00>_lr  <->  |0>_p|11>_lr
        src = idx[(idx & trio) == bp]
        dst = src ^ trio
        out[dst] += spec.g * a[src]
        out[src] += spec.g * a[dst]
    return StateVector(n, out)


def hamiltonian_matrix(spec: TreeHamiltonianSpec, active_layer: int) -> np.ndarray:
    dim = 1 << spec.n_qubits
    if dim > MAX_DENSE_DIM:
        raise ValidationError(f"dense Hamiltonian limited to dimension {MAX_DENSE_DIM}")
    cols = []
    for k in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[k] = 1.0
        cols.append(apply_hamiltonian(spec, active_layer, StateVector(spec.n_qubits, e)).amplitudes)
    return np.stack(cols, axis=1)


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    dev = np.abs(u.conj().T @ u - np.eye(h.shape[0])).max()
    if not np.isfinite(dev) or dev > 1e-10:
        raise NumericalError(f"propagator not unitary (deviation {dev:.3e})")
    return u


def evolve_pulsed(
    spec: TreeHamiltonianSpec, schedule: PulseSchedule, state: StateVector
) -> StateVector:
    if state.n_qubits != spec.n_qubits:
        raise ValidationError(f"state has {state.n_qubits} qubits, tree has {spec.n_qubits}")
    if 1 << spec.n_qubits > MAX_DENSE_DIM:
        raise ValidationError(f"dense evolution limited to dimension {MAX_DENSE_DIM}")
    cache: dict[int, np.ndarray] = {}
    a = state.amplitudes.copy()
    for layer, duration in schedule.segments:
        if layer not in cache:
            cache[layer] = hamiltonian_matrix(spec, layer)
        a = propagator(cache[layer], duration) @ a
    out = StateVector(spec.n_qubits, a)
    if abs(out.norm_squared() - 1.0) > 1e-10:
        raise NumericalError("norm not preserved during pulsed evolution")
    return out


def prepared_input(cfg: TreeConfig) -> StateVector:
    """Ry(theta) on the system qubit of the all-zero register."""
    return run_with_flips(Circuit(cfg.n_qubits, (Ry(cfg.theta, 0),)), zero_state(cfg.n_qubits))


def compare_with_circuit(
    cfg: TreeConfig,
    spec: TreeHamiltonianSpec | None = None,
    schedule: PulseSchedule | None = None,
) -> float:
    """Max population difference between the gate circuit and pulsed evolution.

    Each completed transfer pulse multiplies its branch by -i, so amplitudes
    differ by phases; only populations are compared.
    """
    if cfg.flip_prob != 0:
        raise ValidationError("comparison needs the noise-free circuit")
    spec = spec or TreeHamiltonianSpec(cfg.n_layers)
    if spec.n_layers != cfg.n_layers:
        raise ValidationError("tree config and Hamiltonian spec disagree on layer count")
    if spec.omegas is not None and any(spec.omegas):
        raise ValidationError("comparison assumes zero transition frequencies")
    schedule = schedule or PulseSchedule.default(spec)
    gate = run_with_flips(build_tree_circuit(cfg), zero_state(cfg.n_qubits))
    ham = evolve_pulsed(spec, schedule, prepared_input(cfg))
    return float(np.abs(np.abs(gate.amplitudes) ** 2 - np.abs(ham.amplitudes) ** 2).max())
