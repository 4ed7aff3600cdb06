"""Command-line entry point: ``qms tree``, ``qms spin``, ``qms oracle``, ``qms rerun``.

Every run is driven by a plain config dict that is echoed in the report, so
``qms rerun report.json`` reproduces the run.

Exit codes: 0 success, 2 invalid flags or inputs, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from .errors import NumericalError, ValidationError
from .gates import run_with_flips, sample_trajectories
from .hamiltonian import compare_with_circuit
from .optimizer import OptimizerConfig
from .report import RunReport, load_report
from .spin import (
    IsingTopology,
    VariationalParams,
    cat_fidelity,
    evaluator,
    ground_manifold_weight,
    optimize,
    spectral_weights,
)
from .statevector import distribution_from_probs, marginal_one, probabilities, sample, zero_state
from .tree import (
    MAX_EXACT_LAYERS,
    TreeConfig,
    build_tree_circuit,
    mirror_check,
    noisy_probs,
)

# above this size the spin defaults shrink to a budget that fits a desk run
LARGE_SPIN_QUBITS = 12
LARGE_SPIN_RESTARTS = 1
LARGE_SPIN_MAX_EVALS = 1500


def run_tree(config: dict[str, Any]) -> RunReport:
    cfg = TreeConfig(config["layers"], config["theta"], config["flip_prob"])
    if config["exact"] and cfg.n_layers > MAX_EXACT_LAYERS:
        raise ValidationError(
            f"--exact enumeration limited to {MAX_EXACT_LAYERS} layers, got {cfg.n_layers}"
        )
    if cfg.flip_prob > 0 and not config["exact"] and config["shots"] == 0:
        raise ValidationError("a noisy tree run needs --exact, --shots or both")
    if config["shots"] < 0:
        raise ValidationError("--shots must be >= 0")
    circuit = build_tree_circuit(cfg)
    psi0 = zero_state(cfg.n_qubits)
    diagnostics: dict[str, Any] = {
        "n_qubits": cfg.n_qubits,
        "flip_sites": len(circuit.flip_sites),
    }
    distribution = None
    if cfg.flip_prob == 0:
        out = run_with_flips(circuit, psi0)
        diagnostics["intermediate_excitation"] = max(
            (marginal_one(out, q) for q in cfg.intermediates), default=0.0
        )
        probs = np.abs(out.amplitudes) ** 2
    elif config["exact"]:
        probs = noisy_probs(cfg)
    else:
        probs = None
    if probs is not None:
        distribution = distribution_from_probs(probs, cfg.n_qubits, config["cutoff"])
        if cfg.n_layers <= MAX_EXACT_LAYERS:
            diagnostics["mirror_deviation"] = mirror_check(cfg)
    counts = None
    if config["shots"] > 0:
        counts = sample_trajectories(circuit, psi0, config["shots"], config["seed"])
    return RunReport("tree", config, config["seed"], distribution, counts, diagnostics)


def _spin_budget(config: dict[str, Any]) -> tuple[int, int]:
    large = config["n"] > LARGE_SPIN_QUBITS
    restarts = config.get("restarts") or (LARGE_SPIN_RESTARTS if large else 8)
    max_evals = config.get("max_evals") or (
        LARGE_SPIN_MAX_EVALS if large else 500 * 2 * config["p"]
    )
    return restarts, max_evals


def run_spin(config: dict[str, Any]) -> RunReport:
    n, p, theta = config["n"], config["p"], config["theta"]
    if p < 1:
        raise ValidationError("--p must be >= 1")
    topo = IsingTopology.named(config["topology"], n)
    diagnostics: dict[str, Any] = {}
    if config.get("optimize"):
        restarts, max_evals = _spin_budget(config)
        config["restarts"], config["max_evals"] = restarts, max_evals
        opt_cfg = OptimizerConfig(
            max_evals=max_evals,
            box=((0.0, math.pi),) * (2 * p),
            f_tol=config["f_tol"],
            restarts=restarts,
            seed=config["seed"],
        )
        result = optimize(topo, p, 0.0, opt_cfg)
        params = result.params
        diagnostics["optimizer"] = {
            "evaluations": result.evaluations,
            "converged": result.converged,
            "restart_energies": list(result.restart_energies),
        }
    elif config.get("params") is not None:
        params = VariationalParams(config["params"]["gammas"], config["params"]["betas"])
        if params.p != p:
            raise ValidationError(f"parameter file holds {params.p} layers but --p is {p}")
    else:
        raise ValidationError("spin needs --optimize or --params FILE")

    state = evaluator(topo).state(params, theta)
    e = evaluator(topo).energy(params)
    diagnostics.update(
        {
            "params": {"p": params.p, "gammas": list(params.gammas), "betas": list(params.betas)},
            "energy": e,
            "ground_energy": topo.ground_energy,
            "cat_fidelity": cat_fidelity(state, theta),
            "ground_manifold_weight": ground_manifold_weight(state),
            "spectral_weights": {repr(k): v for k, v in spectral_weights(state, topo).items()},
        }
    )
    cutoff = config["cutoff"]
    distribution = probabilities(state, cutoff)
    diagnostics["dominant"] = [list(kv) for kv in distribution.dominant(2)]
    counts = sample(state, config["shots"], config["seed"]) if config["shots"] > 0 else None
    return RunReport("spin", config, config["seed"], distribution, counts, diagnostics)


def run_oracle(config: dict[str, Any]) -> RunReport:
    layers = config["layers"]
    if layers > 3:
        raise ValidationError("oracle limited to 3 layers")
    if layers < 2:
        raise ValidationError("oracle needs at least 2 layers")
    count = config["theta_grid"]
    if count < 1:
        raise ValidationError("--theta-grid must be >= 1")
    thetas = np.linspace(0.0, math.pi, count) if count > 1 else np.array([0.0])
    rows = [
        {"theta": float(t), "deviation": compare_with_circuit(TreeConfig(layers, float(t)))}
        for t in thetas
    ]
    diagnostics = {"deviations": rows, "max_deviation": max(r["deviation"] for r in rows)}
    report = RunReport("oracle", config, None, diagnostics=diagnostics)
    report.table = rows
    return report


RUNNERS = {"tree": run_tree, "spin": run_spin, "oracle": run_oracle}


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", type=Path, help="write the report here instead of stdout")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument(
        "--no-timing", action="store_true", help="emit wall_time_ms as null (byte-stable output)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qms", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    tree = subs.add_parser("tree", help="tree-network detection model")
    tree.add_argument("--layers", type=int, default=3)
    tree.add_argument("--theta", type=float, default=0.0, help="system-qubit Ry angle (radians)")
    tree.add_argument("--flip-prob", type=float, default=0.0)
    tree.add_argument("--shots", type=int, default=0, help="trajectory shots (0 = exact only)")
    tree.add_argument("--seed", type=int, default=0)
    tree.add_argument("--exact", action="store_true", help="enumerate flip patterns exactly")
    tree.add_argument("--cutoff", type=float, default=1e-12,
                      help="omit outcomes with probability <= cutoff")
    _common(tree)

    spin = subs.add_parser("spin", help="Ising spin-measurement model")
    spin.add_argument("--n", type=int, default=7, help="total qubits incl. the system qubit")
    spin.add_argument("--p", type=int, default=3, help="circuit depth")
    spin.add_argument("--theta", type=float, default=0.0)
    mode = spin.add_mutually_exclusive_group()
    mode.add_argument("--optimize", action="store_true", help="optimize at theta=0 first")
    mode.add_argument("--params", type=Path, help="JSON file with p, gammas, betas")
    spin.add_argument("--save-params", type=Path, help="write optimized parameters here")
    spin.add_argument("--topology", choices=("chain", "star", "ring"), default="chain")
    spin.add_argument("--shots", type=int, default=0)
    spin.add_argument("--seed", type=int, default=0)
    spin.add_argument("--restarts", type=int)
    spin.add_argument("--max-evals", type=int)
    spin.add_argument("--f-tol", type=float, default=1e-6)
    spin.add_argument("--cutoff", type=float,
                      help="omit outcomes below this probability (default 0, or 1e-6 above 12 qubits)")
    _common(spin)

    oracle = subs.add_parser("oracle", help="gate circuit vs pulsed Hamiltonian populations")
    oracle.add_argument("--layers", type=int, default=2)
    oracle.add_argument("--theta-grid", type=int, default=9)
    _common(oracle)

    rerun = subs.add_parser("rerun", help="re-execute a run from a JSON report's config")
    rerun.add_argument("report", type=Path)
    _common(rerun)
    return parser


def config_from_args(args: argparse.Namespace) -> tuple[str, dict[str, Any]]:
    if args.command == "rerun":
        data = load_report(args.report.read_text())
        return data["model"], dict(data["config"])
    if args.command == "tree":
        return "tree", {
            "layers": args.layers,
            "theta": args.theta,
            "flip_prob": args.flip_prob,
            "shots": args.shots,
            "seed": args.seed,
            "exact": args.exact,
            "cutoff": args.cutoff,
        }
    if args.command == "spin":
        params = None
        if args.params is not None:
            params = VariationalParams.from_json(args.params.read_text())
            params = {"gammas": list(params.gammas), "betas": list(params.betas)}
        if args.cutoff is not None:
            cutoff = args.cutoff
        else:
            cutoff = 1e-6 if args.n > LARGE_SPIN_QUBITS else 0.0
        return "spin", {
            "n": args.n,
            "p": args.p,
            "theta": args.theta,
            "topology": args.topology,
            "optimize": args.optimize,
            "params": params,
            "restarts": args.restarts,
            "max_evals": args.max_evals,
            "f_tol": args.f_tol,
            "shots": args.shots,
            "seed": args.seed,
            "cutoff": cutoff,
        }
    return "oracle", {"layers": args.layers, "theta_grid": args.theta_grid}


def execute(model: str, config: dict[str, Any], timing: bool = True) -> RunReport:
    if model not in RUNNERS:
        raise ValidationError(f"unknown model {model!r}")
    start = time.perf_counter()
    report = RUNNERS[model](config)
    report.wall_time_ms = (time.perf_counter() - start) * 1000 if timing else None
    return report


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model, config = config_from_args(args)
        report = execute(model, config, timing=not args.no_timing)
        text = report.render(args.format)
        if getattr(args, "save_params", None) is not None:
            d = report.diagnostics["params"]
            args.save_params.write_text(
                VariationalParams(d["gammas"], d["betas"]).to_json() + "\n"
            )
        if args.out is not None:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    except ValidationError as exc:
        print(f"qms: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"qms: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"qms: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
