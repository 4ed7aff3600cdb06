"""Binary tree of qubits that amplifies one excitation into the leaf layer.

Nodes use heap indexing: node 0 is the system qubit and the children of
node ``i`` are ``2i+1`` and ``2i+2``. Each parent-to-children transfer is a
CNOT, CNOT, Toffoli block; optional flip noise follows every block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gates import CNOT, Circuit, FlipSite, Gate, Ry, Toffoli, run_with_flips
from .statevector import Distribution, distribution_from_probs, probabilities, zero_state

MAX_EXACT_LAYERS = 4


@dataclass(frozen=True)
class TreeConfig:
    n_layers: int
    theta: float = 0.0
    flip_prob: float = 0.0

    def __post_init__(self):
        if self.n_layers < 2:
            raise ValidationError("a tree needs at least 2 layers")
        if (1 << self.n_layers) - 1 > 24:
            raise ValidationError(f"{self.n_layers} layers exceed the 24-qubit limit")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValidationError(f"flip probability {self.flip_prob} outside [0, 1]")

    @property
    def n_qubits(self) -> int:
        return (1 << self.n_layers) - 1

    def layer_nodes(self, layer: int) -> range:
        """Nodes of 1-based ``layer``; layer 1 holds only the system qubit."""
        return range((1 << (layer - 1)) - 1, (1 << layer) - 1)

    @property
    def leaves(self) -> range:
        return self.layer_nodes(self.n_layers)

    @property
    def intermediates(self) -> range:
        return range(1, (1 << (self.n_layers - 1)) - 1)

    def leaf_mask(self) -> int:
        """Basis-index mask with a 1 on every leaf qubit."""
        n = self.n_qubits
        return sum(1 << (n - 1 - q) for q in self.leaves)


def three_qubit_block(parent: int, left: int, right: int) -> list[Gate]:
    if len({parent, left, right}) != 3:
        raise ValidationError(f"block indices must be distinct: {(parent, left, right)}")
    return [CNOT(parent, left), CNOT(parent, right), Toffoli(left, right, parent)]


def build_tree_circuit(cfg: TreeConfig) -> Circuit:
    ops: list[Gate] = [Ry(cfg.theta, 0)]
    for layer in range(1, cfg.n_layers):
        for parent in cfg.layer_nodes(layer):
            left, right = 2 * parent + 1, 2 * parent + 2
            ops += three_qubit_block(parent, left, right)
            if cfg.flip_prob > 0:
                ops += [FlipSite(cfg.flip_prob, left), FlipSite(cfg.flip_prob, right)]
    return Circuit(cfg.n_qubits, tuple(ops))


def ideal_distribution(cfg: TreeConfig) -> Distribution:
    circuit = build_tree_circuit(cfg)
    return probabilities(run_with_flips(circuit, zero_state(cfg.n_qubits)))


def _split_sites(circuit: Circuit) -> tuple[list[int], list[int]]:
    """Partition FlipSite ordinals into (interior, terminal).

    A terminal site acts on a qubit that no later unitary touches, so its
    flip commutes to the end of the circuit.
    """
    interior, terminal = [], []
    ops = circuit.instructions
    for ordinal, k in enumerate(circuit.flip_sites):
        q = ops[k].qubits[0]
        touched = any(q in g.qubits for g in ops[k + 1 :] if not g.is_noise)
        (interior if touched else terminal).append(ordinal)
    return interior, terminal


def noisy_probs(cfg: TreeConfig) -> np.ndarray:
    """Exact outcome probabilities (indexed by basis state) under flip noise."""
    if cfg.n_layers > MAX_EXACT_LAYERS:
        raise ValidationError(
            f"exact enumeration limited to {MAX_EXACT_LAYERS} layers, got {cfg.n_layers}"
        )
    circuit = build_tree_circuit(cfg)
    psi0 = zero_state(cfg.n_qubits)
    sites = circuit.flip_sites
    interior, terminal = _split_sites(circuit)
    p = cfg.flip_prob
    total = np.zeros(1 << cfg.n_qubits)
    for pattern in itertools.product((False, True), repeat=len(interior)):
        k = sum(pattern)
        weight = p**k * (1.0 - p) ** (len(interior) - k)
        if weight == 0.0:
            continue
        flips = [False] * len(sites)
        for ordinal, bit in zip(interior, pattern):
            flips[ordinal] = bit
        out = run_with_flips(circuit, psi0, flips)
        total += weight * np.abs(out.amplitudes) ** 2
    if p > 0.0:
        idx = np.arange(total.size)
        n = cfg.n_qubits
        for ordinal in terminal:
            q = circuit.instructions[sites[ordinal]].qubits[0]
            flipped = total[idx ^ (1 << (n - 1 - q))]
            total = flipped if p == 1.0 else (1.0 - p) * total + p * flipped
    return total


def exact_noisy_distribution(cfg: TreeConfig) -> Distribution:
    """Exact flip-noise mixture by enumerating every flip pattern.

    Zero-probability outcomes are dropped from the returned mapping.
    """
    return distribution_from_probs(noisy_probs(cfg), cfg.n_qubits)


def mirror_deviation(probs_a: np.ndarray, probs_b: np.ndarray, mask: int) -> float:
    """max_s |P_a(s) - P_b(s XOR mask)| over basis indices."""
    idx = np.arange(probs_a.size)
    return float(np.abs(probs_a - probs_b[idx ^ mask]).max())


def mirror_check(cfg: TreeConfig) -> float:
    """Deviation between the distributions for theta and pi - theta.

    Outcomes are matched by complementing the leaf qubits, which swaps the
    two ideal outcomes while leaving the (always reset) system and
    intermediate qubits alone.
    """
    a = noisy_probs(cfg)
    b = noisy_probs(TreeConfig(cfg.n_layers, np.pi - cfg.theta, cfg.flip_prob))
    return mirror_deviation(a, b, cfg.leaf_mask())
