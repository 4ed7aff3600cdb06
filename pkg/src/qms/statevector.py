"""Dense state vectors, gate kernels and Born-rule readout.

Qubit 0 is the system qubit and is rendered leftmost: a bitstring
``b_0 b_1 ... b_{n-1}`` maps to basis index ``sum(b_i * 2**(n-1-i))``.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ValidationError

MAX_QUBITS = 24
UNITARY_TOL = 1e-12
NORM_TOL = 1e-10


class StateVector:
    """``2**n_qubits`` complex128 amplitudes, mutated in place by the kernels."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes: np.ndarray):
        _check_size(n_qubits)
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n_qubits,):
            raise ValidationError(
                f"expected {1 << n_qubits} amplitudes for {n_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def bit_position(self, qubit: int) -> int:
        _check_qubit(qubit, self.n_qubits)
        return self.n_qubits - 1 - qubit

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


class Distribution(Mapping):
    """Outcome probabilities keyed by n-bit string, iterated in bitstring order.

    When built with ``cutoff > 0`` the entries may sum to less than one.
    """

    def __init__(self, entries: Mapping[str, float], cutoff: float = 0.0):
        items = sorted(entries.items())
        if items:
            width = len(items[0][0])
            for key, p in items:
                if len(key) != width or set(key) - {"0", "1"}:
                    raise ValidationError(f"malformed outcome key {key!r}")
                if not -1e-12 <= p <= 1.0 + 1e-12:
                    raise ValidationError(f"probability {p} for {key} outside [0, 1]")
        if cutoff == 0.0 and items:
            total = sum(p for _, p in items)
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"probabilities sum to {total!r}, not 1")
        self._entries = dict(items)
        self.cutoff = cutoff

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self._entries))) if self._entries else 0

    def __getitem__(self, key: str) -> float:
        return self._entries[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key, default=0.0):
        return self._entries.get(key, default)

    def dominant(self, k: int = 1) -> list[tuple[str, float]]:
        """The ``k`` most probable outcomes, ties broken by bitstring."""
        return sorted(self._entries.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def __repr__(self) -> str:
        return f"Distribution({self._entries!r})"


def _check_size(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ValidationError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits!r}")


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise ValidationError(f"qubit index {qubit} out of range for {n_qubits} qubits")


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def new_basis_state(n_qubits: int, bits: str) -> StateVector:
    _check_size(n_qubits)
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise ValidationError(f"bitstring {bits!r} is not a {n_qubits}-bit string")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[int(bits, 2)] = 1.0
    return StateVector(n_qubits, amps)


def zero_state(n_qubits: int) -> StateVector:
    return new_basis_state(n_qubits, "0" * n_qubits)


def _check_unitary(u: np.ndarray) -> None:
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if dev > UNITARY_TOL:
        raise ValidationError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3e})")


def _check_norm(state: StateVector) -> None:
    dev = abs(state.norm_squared() - 1.0)
    if dev > NORM_TOL:
        raise ValidationError(f"state norm drifted by {dev:.3e}")


def apply_1q(state: StateVector, qubit: int, u: np.ndarray, validate: bool = False) -> None:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValidationError("single-qubit gate must be 2x2")
    if validate:
        _check_unitary(u)
    pos = state.bit_position(qubit)
    _kernels.apply_1q(state.amplitudes, pos, u[0, 0], u[0, 1], u[1, 0], u[1, 1])
    if validate:
        _check_norm(state)


def apply_controlled(
    state: StateVector,
    controls: Sequence[int],
    target: int,
    u: np.ndarray,
    validate: bool = False,
) -> None:
    """Apply ``u`` to ``target`` on the subspace where every control bit is 1."""
    u = np.asarray(u, dtype=np.complex128)
    qubits = [*controls, target]
    if len(set(qubits)) != len(qubits):
        raise ValidationError(f"controls and target overlap: {qubits}")
    if validate:
        _check_unitary(u)
    cmask = 0
    for c in controls:
        cmask |= 1 << state.bit_position(c)
    pos = state.bit_position(target)
    _kernels.apply_controlled(state.amplitudes, cmask, pos, u[0, 0], u[0, 1], u[1, 0], u[1, 1])
    if validate:
        _check_norm(state)


def apply_2q_diagonal(
    state: StateVector, q1: int, q2: int, phases: Sequence[complex], validate: bool = False
) -> None:
    """Multiply each amplitude by ``phases[2*b_q1 + b_q2]``."""
    if q1 == q2:
        raise ValidationError("diagonal two-qubit gate needs distinct qubits")
    phases = np.asarray(phases, dtype=np.complex128)
    if phases.shape != (4,):
        raise ValidationError("need exactly 4 phases")
    if validate and np.abs(np.abs(phases) - 1.0).max() > UNITARY_TOL:
        raise ValidationError("diagonal entries must have unit modulus")
    _kernels.apply_diag2(
        state.amplitudes, state.bit_position(q1), state.bit_position(q2), phases
    )
    if validate:
        _check_norm(state)


def distribution_from_probs(probs: np.ndarray, n_qubits: int, cutoff: float = 0.0) -> Distribution:
    """Outcomes with probability >= ``cutoff``; exact zeros are never listed."""
    keep = np.flatnonzero((probs >= cutoff) & (probs > 0))
    if keep.size == 0:
        raise ValidationError(f"no outcome above cutoff {cutoff}")
    return Distribution(
        {bitstring(int(k), n_qubits): float(probs[k]) for k in keep}, cutoff=cutoff
    )


def probabilities(state: StateVector, cutoff: float = 0.0) -> Distribution:
    return distribution_from_probs(np.abs(state.amplitudes) ** 2, state.n_qubits, cutoff)


def sample(state: StateVector, shots: int, seed: int) -> dict[str, int]:
    """Draw ``shots`` i.i.d. Born-rule outcomes; returns nonzero counts by bitstring."""
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    probs = np.abs(state.amplitudes) ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    n = state.n_qubits
    return {bitstring(int(k), n): int(counts[k]) for k in np.flatnonzero(counts)}


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugating ``a``."""
    if a.n_qubits != b.n_qubits:
        raise ValidationError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def marginal_one(state: StateVector, qubit: int) -> float:
    """Probability of reading 1 on ``qubit``."""
    pos = state.bit_position(qubit)
    idx = np.arange(state.amplitudes.size)
    mask = ((idx >> pos) & 1).astype(bool)
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))
