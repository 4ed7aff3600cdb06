"""Ising spin-measurement model: variational circuit, energies and optimization.

The ansatz prepares ``Ry(theta)`` on the system qubit and ``|+>`` on the
measurement qubits, then alternates ZZ(gamma) on every edge with
XRot(beta) on every measurement qubit. The system qubit only ever sees
diagonal gates after preparation.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import ValidationError
from .gates import Circuit, Gate, H, Ry, XRot, ZZ, run_circuit
from .optimizer import OptimizerConfig, multi_start
from .statevector import Distribution, StateVector, probabilities, zero_state


@dataclass(frozen=True)
class IsingTopology:
    n_qubits: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        object.__setattr__(self, "edges", edges)
        n = self.n_qubits
        if n < 2:
            raise ValidationError("need a system qubit and at least one measurement qubit")
        seen = set()
        for i, j, w in edges:
            if i == j:
                raise ValidationError(f"self-loop on qubit {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"edge ({i}, {j}) out of range for {n} qubits")
            if not w > 0:
                raise ValidationError(f"coupling on ({i}, {j}) must be positive")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValidationError(f"duplicate edge {key}")
            seen.add(key)
        # connectivity keeps the ground manifold two-dimensional
        adj = {q: set() for q in range(n)}
        for i, j, _ in edges:
            adj[i].add(j)
            adj[j].add(i)
        reached, frontier = {0}, [0]
        while frontier:
            q = frontier.pop()
            for r in adj[q] - reached:
                reached.add(r)
                frontier.append(r)
        if len(reached) != n:
            raise ValidationError("topology is not connected")

    @classmethod
    def chain(cls, n_qubits: int, J: float = 1.0) -> IsingTopology:
        return cls(n_qubits, tuple((i, i + 1, J) for i in range(n_qubits - 1)))

    @classmethod
    def star(cls, n_qubits: int, J: float = 1.0) -> IsingTopology:
        return cls(n_qubits, tuple((0, j, J) for j in range(1, n_qubits)))

    @classmethod
    def ring(cls, n_qubits: int, J: float = 1.0) -> IsingTopology:
        if n_qubits < 3:
            return cls.chain(n_qubits, J)
        return cls(n_qubits, tuple((i, (i + 1) % n_qubits, J) for i in range(n_qubits)))

    @classmethod
    def named(cls, kind: str, n_qubits: int) -> IsingTopology:
        builders = {"chain": cls.chain, "star": cls.star, "ring": cls.ring}
        if kind not in builders:
            raise ValidationError(f"unknown topology {kind!r}")
        return builders[kind](n_qubits)

    @property
    def ground_energy(self) -> float:
        return -sum(w for _, _, w in self.edges)

    def energy_diagonal(self, n_bits: int | None = None) -> np.ndarray:
        """Ising energy of every basis state.

        With ``n_bits = n_qubits - 1`` only the half with the system qubit in
        0 is tabulated.
        """
        n = self.n_qubits
        n_bits = n if n_bits is None else n_bits
        idx = np.arange(1 << n_bits)
        energy = np.zeros(idx.size)
        for i, j, w in self.edges:
            energy -= w * self._z(idx, i) * self._z(idx, j)
        return energy

    def zz_count(self, n_bits: int) -> np.ndarray:
        """Sum of Z_i Z_j over edges (unweighted), as int16."""
        idx = np.arange(1 << n_bits)
        total = np.zeros(idx.size, dtype=np.int16)
        for i, j, _ in self.edges:
            total += (self._z(idx, i) * self._z(idx, j)).astype(np.int16)
        return total

    def _z(self, idx: np.ndarray, q: int) -> np.ndarray:
        pos = self.n_qubits - 1 - q
        return 1 - 2 * ((idx >> pos) & 1)


@dataclass(frozen=True)
class VariationalParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValidationError("gammas and betas must be non-empty and of equal length")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> VariationalParams:
        x = list(x)
        p = len(x) // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    @classmethod
    def zeros(cls, p: int) -> VariationalParams:
        return cls((0.0,) * p, (0.0,) * p)

    @classmethod
    def ramp(cls, p: int) -> VariationalParams:
        k = np.arange(1, p + 1) / p
        return cls(tuple(0.4 * np.pi * k), tuple(0.4 * np.pi * (1 - k)))

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "gammas": list(self.gammas), "betas": list(self.betas)})

    @classmethod
    def from_json(cls, text: str) -> VariationalParams:
        try:
            d = json.loads(text)
            params = cls(tuple(d["gammas"]), tuple(d["betas"]))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed parameter file: {exc}") from exc
        if "p" in d and d["p"] != params.p:
            raise ValidationError(f"parameter file says p={d['p']} but holds {params.p} layers")
        return params


@dataclass(frozen=True)
class OptimizerResult:
    params: VariationalParams
    energy: float
    evaluations: int
    converged: bool
    topology: IsingTopology
    restart_energies: tuple[float, ...] = ()


def build_spin_circuit(topo: IsingTopology, params: VariationalParams, theta: float) -> Circuit:
    n = topo.n_qubits
    ops: list[Gate] = [Ry(theta, 0)] + [H(q) for q in range(1, n)]
    for gamma, beta in zip(params.gammas, params.betas):
        ops += [ZZ(gamma, i, j) for i, j, _ in topo.edges]
        ops += [XRot(beta, q) for q in range(1, n)]
    return Circuit(n, tuple(ops))


def _check_size(state: StateVector, topo: IsingTopology) -> None:
    if state.n_qubits != topo.n_qubits:
        raise ValidationError(
            f"state has {state.n_qubits} qubits, topology has {topo.n_qubits}"
        )


def ising_energy(state: StateVector, topo: IsingTopology) -> float:
    _check_size(state, topo)
    return float(np.dot(np.abs(state.amplitudes) ** 2, topo.energy_diagonal()))


def spectral_weights(state: StateVector, topo: IsingTopology) -> dict[float, float]:
    """Total probability on each Ising energy level, keyed by level (ascending)."""
    _check_size(state, topo)
    energy = np.round(topo.energy_diagonal(), 9) + 0.0
    probs = np.abs(state.amplitudes) ** 2
    levels, inverse = np.unique(energy, return_inverse=True)
    weights = np.bincount(inverse, weights=probs, minlength=levels.size)
    return {float(e): float(w) for e, w in zip(levels, weights)}


def ground_manifold_weight(state: StateVector) -> float:
    a = state.amplitudes
    return float(abs(a[0]) ** 2 + abs(a[-1]) ** 2)


def cat_fidelity(state: StateVector, theta: float) -> float:
    """|cos(theta/2)<0...0|psi> + sin(theta/2)<1...1|psi>|^2."""
    a = state.amplitudes
    return float(abs(math.cos(theta / 2) * a[0] + math.sin(theta / 2) * a[-1]) ** 2)


class SpinEvaluator:
    """Fast exact simulation of the ansatz for one topology.

    The ansatz commutes with flipping every qubit, and the system qubit is
    never rotated after preparation. So the final state is
    ``cos(theta/2)|0>v + sin(theta/2)|1>(flipped v)``, where ``v`` lives on
    the measurement qubits; only ``v`` is simulated. Since the Ising energy
    is flip invariant, the energy does not depend on ``theta``.
    """

    def __init__(self, topo: IsingTopology):
        self.topo = topo
        self.n_bits = topo.n_qubits - 1
        self._energy = topo.energy_diagonal(self.n_bits)
        counts = topo.zz_count(self.n_bits)
        self._offset = len(topo.edges)
        self._levels = counts
        self._span = np.arange(-self._offset, self._offset + 1)

    def sector(self, params: VariationalParams) -> tuple[np.ndarray, np.ndarray]:
        """(real, imag) amplitudes of ``v``."""
        size = 1 << self.n_bits
        re = np.full(size, 1.0 / math.sqrt(size))
        im = np.zeros(size)
        for gamma, beta in zip(params.gammas, params.betas):
            phase = self._span * gamma
            _kernels.diag_lookup(re, im, self._levels, self._offset, np.cos(phase), np.sin(phase))
            _kernels.xrot_all_bits(re, im, self.n_bits, math.cos(beta), math.sin(beta))
        return re, im

    def energy(self, params: VariationalParams) -> float:
        re, im = self.sector(params)
        return float(_kernels.weighted_norm(re, im, self._energy))

    def state(self, params: VariationalParams, theta: float) -> StateVector:
        re, im = self.sector(params)
        v = re + 1j * im
        amps = np.concatenate([math.cos(theta / 2) * v, math.sin(theta / 2) * v[::-1]])
        return StateVector(self.topo.n_qubits, amps)


@lru_cache(maxsize=8)
def evaluator(topo: IsingTopology) -> SpinEvaluator:
    """Shared evaluator per topology; evaluation itself allocates per call, so it is reentrant."""
    return SpinEvaluator(topo)


def simulate(topo: IsingTopology, params: VariationalParams, theta: float) -> StateVector:
    """Gate-by-gate reference simulation of the ansatz from |0...0>."""
    return run_circuit(build_spin_circuit(topo, params, theta), zero_state(topo.n_qubits))


def energy_objective(
    topo: IsingTopology, p: int, theta: float, params: VariationalParams | Sequence[float]
) -> float:
    """Exact Ising energy of the ansatz output."""
    if not isinstance(params, VariationalParams):
        params = VariationalParams.from_vector(params)
    if params.p != p:
        raise ValidationError(f"expected {p} layers, got {params.p}")
    return evaluator(topo).energy(params)


def default_config(p: int, seed: int = 0, restarts: int = 8, max_evals: int | None = None) -> OptimizerConfig:
    return OptimizerConfig(
        max_evals=max_evals or 500 * 2 * p,
        box=((0.0, math.pi),) * (2 * p),
        f_tol=1e-6,
        restarts=restarts,
        seed=seed,
    )


def optimize(
    topo: IsingTopology,
    p: int,
    theta: float = 0.0,
    config: OptimizerConfig | None = None,
    seed: int | None = None,
) -> OptimizerResult:
    """Multi-start Nelder-Mead on the ansatz energy.

    ``theta`` is accepted for the workflow's sake; the energy is independent
    of it (see :class:`SpinEvaluator`).
    """
    if p < 1:
        raise ValidationError("depth p must be >= 1")
    config = config or default_config(p, seed=0 if seed is None else seed)
    if seed is not None and seed != config.seed:
        config = OptimizerConfig(
            config.max_evals, config.box, config.f_tol, config.restarts, seed, config.initial_step
        )
    if config.dim != 2 * p:
        raise ValidationError(f"optimizer box has {config.dim} dimensions, need {2 * p}")
    ev = evaluator(topo)

    def f(x):
        return ev.energy(VariationalParams.from_vector(x))

    best, runs = multi_start(f, VariationalParams.ramp(p).to_vector(), config)
    return OptimizerResult(
        params=VariationalParams.from_vector(best.x),
        energy=best.fun,
        evaluations=sum(r.evals for r in runs),
        converged=best.converged,
        topology=topo,
        restart_energies=tuple(r.fun for r in runs),
    )


def transfer_params(
    result: OptimizerResult, topo: IsingTopology, theta_new: float, cutoff: float = 0.0
) -> Distribution:
    """Exact outcome distribution with frozen parameters and a new input angle."""
    if result.topology != topo:
        raise ValidationError("parameters were optimized for a different topology")
    return probabilities(evaluator(topo).state(result.params, theta_new), cutoff)
