"""Acceptance suite: one test per criterion, each echoing a PASS/FAIL line.

The lines are printed inline (visible with ``-s``) and collected into the
terminal summary by ``conftest.pytest_terminal_summary``.
"""

import contextlib
import json
import math
import statistics
import time

import numpy as np
import pytest

from qms.cli import main
from qms.gates import Circuit, ZZ, run_circuit, run_with_flips, sample_trajectories
from qms.hamiltonian import compare_with_circuit
from qms.optimizer import OptimizerConfig, minimize, multi_start
from qms.spin import (
    IsingTopology,
    VariationalParams,
    evaluator,
    ground_manifold_weight,
    optimize,
    simulate,
    transfer_params,
)
from qms.statevector import StateVector, marginal_one, zero_state
from qms.tree import TreeConfig, build_tree_circuit, mirror_deviation, noisy_probs

from conftest import ACCEPTANCE_LINES, brute_noisy, random_state

THETA_GRID = np.linspace(0.0, math.pi, 9)
FLIP_GRID = (0.01, 0.02, 0.05, 0.1)

# frozen from the seed-7 reference run (ground weight 0.30305 at theta = 0);
# a depth-3 chain cannot exceed 0.5 because the far end spin stays unpolarized
GROUND_WEIGHT_THRESHOLD = 0.30
SPIN_SEED = 7


@contextlib.contextmanager
def criterion(label):
    try:
        yield
    except BaseException as exc:
        line = f"FAIL {label}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        raise
    line = f"PASS {label}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def median_ms(fn, repeats=7):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000)
    return statistics.median(times)


def ideal_tree_probs(theta):
    cfg = TreeConfig(3, theta)
    return np.abs(run_with_flips(build_tree_circuit(cfg), zero_state(7)).amplitudes) ** 2


def test_c01_two_branch_tree_outcomes():
    with criterion("C1 tree L=3 two-outcome distribution, exact to 1e-12, <10 ms"):
        for theta in (0.0, math.pi / 2, math.pi):
            probs = ideal_tree_probs(theta)
            expected = np.zeros(128)
            expected[0b0000000] = math.cos(theta / 2) ** 2
            expected[0b0001111] = math.sin(theta / 2) ** 2
            assert np.max(np.abs(probs - expected)) < 1e-12
            support = {i for i in np.flatnonzero(probs > 1e-12)}
            assert support <= {0b0000000, 0b0001111}
            ms = median_ms(lambda: ideal_tree_probs(theta))
            assert ms < 10, f"{ms:.2f} ms at theta={theta}"


def test_c02_intermediate_reset():
    with criterion("C2 intermediate qubits unexcited < 1e-12 on a 9-point grid"):
        cfg = TreeConfig(3)
        for theta in THETA_GRID:
            out = run_with_flips(build_tree_circuit(TreeConfig(3, float(theta))), zero_state(7))
            for q in cfg.intermediates:
                assert marginal_one(out, q) < 1e-12


def test_c03_gate_hamiltonian_equivalence():
    with criterion("C3 pulsed Hamiltonian populations match the circuit < 1e-9, <5 s"):
        start = time.perf_counter()
        worst = max(
            compare_with_circuit(TreeConfig(layers, float(theta)))
            for layers in (2, 3)
            for theta in THETA_GRID
        )
        elapsed = time.perf_counter() - start
        assert worst < 1e-9, worst
        assert elapsed < 5, f"{elapsed:.2f} s"


def test_c04_noise_mirror_and_trajectories():
    with criterion("C4 mirror map under flip noise < 1e-9, trajectories within 5 sigma"):
        # establish the map: masks satisfying brute(theta) = brute(pi - theta)[i ^ mask]
        pairs = [
            (brute_noisy(TreeConfig(3, th, p)), brute_noisy(TreeConfig(3, math.pi - th, p)))
            for p in FLIP_GRID
            for th in (math.pi / 3, math.pi / 4)
        ]
        masks = [m for m in range(128) if all(mirror_deviation(a, b, m) < 1e-12 for a, b in pairs)]
        assert len(masks) == 1, masks
        (mask,) = masks
        for p in FLIP_GRID:
            for theta in (math.pi / 3, math.pi / 4):
                a = noisy_probs(TreeConfig(3, theta, p))
                b = noisy_probs(TreeConfig(3, math.pi - theta, p))
                assert mirror_deviation(a, b, mask) < 1e-9
                assert abs(a.sum() - 1) < 1e-12

                shots = 100_000
                counts = sample_trajectories(
                    build_tree_circuit(TreeConfig(3, theta, p)), zero_state(7), shots, seed=17
                )
                observed = np.zeros(128)
                for key, c in counts.items():
                    observed[int(key, 2)] = c
                assert observed[a == 0].sum() == 0
                sigma = np.sqrt(shots * a * (1 - a))
                assert np.all(np.abs(observed - shots * a) <= 5 * sigma + 1e-9)


def test_c05_spin_measurement_desk_scale():
    with criterion(
        f"C5 n=7 p=3 spin model: dominance, ground weight >= {GROUND_WEIGHT_THRESHOLD}, "
        "branch symmetry < 0.05, <60 s"
    ):
        topo = IsingTopology.chain(7)
        start = time.perf_counter()
        result = optimize(topo, 3, 0.0, seed=SPIN_SEED)
        d0 = transfer_params(result, topo, 0.0)
        dpi = transfer_params(result, topo, math.pi)
        dhalf = transfer_params(result, topo, math.pi / 2)
        elapsed = time.perf_counter() - start

        assert result.energy < -4.0
        assert d0.dominant()[0][0] == "0000000"
        assert dpi.dominant()[0][0] == "1111111"
        top = dict(dhalf.dominant(2))
        assert set(top) == {"0000000", "1111111"}
        assert abs(top["0000000"] - top["1111111"]) < 0.05
        weight = ground_manifold_weight(evaluator(topo).state(result.params, 0.0))
        print(f"    energy {result.energy:.6f}, ground-manifold weight {weight:.5f}")
        assert weight >= GROUND_WEIGHT_THRESHOLD
        assert elapsed < 60, f"{elapsed:.1f} s"


def test_c06_system_marginal_conservation():
    with criterion("C6 system-qubit marginal equals sin^2(theta/2) to 1e-12 (100 trials, p <= 12)"):
        rng = np.random.default_rng(606)
        topo = IsingTopology.chain(7)
        for _ in range(100):
            p = int(rng.integers(1, 13))
            theta = float(rng.uniform(0, 2 * math.pi))
            params = VariationalParams.from_vector(rng.uniform(0, math.pi, 2 * p))
            out = simulate(topo, params, theta)
            assert abs(marginal_one(out, 0) - math.sin(theta / 2) ** 2) < 1e-12


def test_c07_zz_layers_only_add_phases():
    with criterion("C7 ZZ layers leave basis probabilities unchanged < 1e-12 (100 trials, n=7)"):
        rng = np.random.default_rng(707)
        topo = IsingTopology.chain(7)
        for _ in range(100):
            psi = StateVector(7, random_state(7, rng))
            layers = int(rng.integers(1, 5))
            gates = [
                ZZ(float(rng.uniform(0, 2 * math.pi)), i, j)
                for _ in range(layers)
                for i, j, _w in topo.edges
            ]
            out = run_circuit(Circuit(7, gates), psi)
            before = np.abs(psi.amplitudes) ** 2
            after = np.abs(out.amplitudes) ** 2
            assert np.max(np.abs(after - before)) < 1e-12


@pytest.mark.slow
def test_c08_large_spin_scaling(tmp_path):
    with criterion("C8 spin --p 12 --optimize at n=15/17/19: <250 ms per n=19 evaluation, "
                   "<30 min per size, dominance"):
        topo19 = IsingTopology.chain(19)
        ev = evaluator(topo19)
        params = VariationalParams.ramp(12)
        ev.energy(params)
        # full path: state prep + 12 layers + energy
        ms = median_ms(lambda: ev.energy(params), repeats=5)
        print(f"    n=19 p=12 energy evaluation {ms:.1f} ms")
        assert ms < 250

        for n in (15, 17, 19):
            opt = tmp_path / f"opt{n}.json"
            report = tmp_path / f"report{n}.json"
            start = time.perf_counter()
            code = main(["spin", "--n", str(n), "--p", "12", "--optimize",
                         "--save-params", str(opt), "--out", str(report)])
            elapsed = time.perf_counter() - start
            assert code == 0
            assert elapsed < 1800, f"n={n} took {elapsed:.0f} s"
            d = json.loads(report.read_text())["diagnostics"]
            print(f"    n={n}: {elapsed:.1f} s, energy {d['energy']:.4f}, "
                  f"ground weight {d['ground_manifold_weight']:.4f}")
            assert d["dominant"][0][0] == "0" * n

            def dominant_at(theta, k=1):
                out = tmp_path / f"transfer{n}.json"
                assert main(["spin", "--n", str(n), "--p", "12", "--params", str(opt),
                             "--theta", repr(theta), "--out", str(out)]) == 0
                return json.loads(out.read_text())["diagnostics"]["dominant"][:k]

            assert dominant_at(math.pi)[0][0] == "1" * n
            (a, wa), (b, wb) = dominant_at(math.pi / 2, 2)
            assert {a, b} == {"0" * n, "1" * n}
            assert abs(wa - wb) < 0.05


def test_c09_optimizer_sanity():
    with criterion("C9 multi-start within 0.05 of a pi/100 grid scan; convex problems to f < 1e-8"):
        topo = IsingTopology.chain(3)
        ev = evaluator(topo)
        grid = np.arange(101) * math.pi / 100
        grid_min = min(ev.energy(VariationalParams((g,), (b,))) for g in grid for b in grid)
        cfg = OptimizerConfig(max_evals=1000, box=((0.0, math.pi),) * 2, restarts=8, seed=SPIN_SEED)
        best, _ = multi_start(lambda x: ev.energy(VariationalParams.from_vector(x)),
                              VariationalParams.ramp(1).to_vector(), cfg)
        assert abs(best.fun - grid_min) < 0.05
        assert best.fun <= grid_min + 1e-9

        convex = [
            (lambda x: float(np.sum(x**2)), [3.0, -4.0, 1.5]),
            (lambda x: float((x[0] - 1) ** 2 + 10 * (x[1] + 2) ** 2), [4.0, 4.0]),
            (lambda x: float(np.sum((np.arange(1, 5) * (x - 0.5)) ** 2)), [2.0, -1.0, 0.0, 3.0]),
        ]
        for f, x0 in convex:
            box = ((-10.0, 10.0),) * len(x0)
            r = minimize(f, x0, OptimizerConfig(max_evals=5000, box=box, f_tol=1e-14))
            assert r.fun < 1e-8, r.fun
            m, _ = multi_start(f, x0, OptimizerConfig(max_evals=5000, box=box, f_tol=1e-14,
                                                      restarts=3, seed=1))
            assert m.fun < 1e-8, m.fun


RERUNS = [
    ["tree", "--layers", "3", "--theta", "1.0471975511965976"],
    ["tree", "--theta", "0.7853981633974483", "--flip-prob", "0.05", "--exact",
     "--shots", "2000", "--seed", "3"],
    ["tree", "--layers", "4", "--flip-prob", "0.02", "--shots", "500", "--seed", "8"],
    ["spin", "--n", "7", "--p", "3", "--optimize", "--seed", "7", "--shots", "1000"],
    ["spin", "--n", "5", "--p", "2", "--optimize", "--topology", "ring", "--theta", "1.2",
     "--seed", "4", "--restarts", "3"],
    ["oracle", "--layers", "3", "--theta-grid", "5"],
]


def test_c10_determinism(tmp_path):
    with criterion("C10 reruns from the echoed config are byte-identical (JSON and CSV)"):
        for i, argv in enumerate(RERUNS):
            report = tmp_path / f"r{i}.json"
            assert main([*argv, "--no-timing", "--out", str(report)]) == 0
            for fmt in ("json", "csv"):
                first = tmp_path / f"first{i}.{fmt}"
                again = tmp_path / f"again{i}.{fmt}"
                assert main([*argv, "--no-timing", "--format", fmt, "--out", str(first)]) == 0
                assert main(["rerun", str(report), "--no-timing", "--format", fmt,
                             "--out", str(again)]) == 0
                assert first.read_bytes() == again.read_bytes(), (argv, fmt)
