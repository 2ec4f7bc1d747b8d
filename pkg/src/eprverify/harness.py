"""Batch experiment runner: completeness/soundness sweeps, the inequality
suite, and a SWAP-test benchmark, with JSON/CSV reports.

Reports are deterministic functions of (config, seed): timing is kept out of
the emitted bytes unless explicitly requested.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as rngmod
from .channels import pinch_phi
from .kernel import DensityOperator, layout, tensor_product
from .linalg import partial_trace as partial_trace_positions
from .metrics import (
    additive_perturbation_margin,
    fvg_margins,
    gentle_margin,
    holder_margin,
    mixture_perturbation_margin,
    monotonicity_margin,
    triangle_margin,
)
from .protocol import (
    BRANCH_KEYS,
    ProtocolRun,
    ProverStrategy,
    cheating_proof,
    honest_proof,
    make_toy_verifier,
    swap_test,
)
from .sampling import (
    random_complex_matrix,
    random_density,
    random_projector,
    random_pure,
    random_unitary,
)

EXPERIMENTS = ("completeness", "soundness", "lemmas", "swap-bench")
STRATEGY_KINDS = ("honest", "choi_product", "idle_epr", "local_unitaries")

DEFAULT_TOLERANCES = {
    "margin": 1e-9,
    "branch_sum": 1e-9,
    "swap": 1e-12,
}


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    p: float = 0.75
    p_qubits: int = 1
    a_qubits: int = 1
    l: int = 2
    strategy: dict = field(default_factory=lambda: {"kind": "idle_epr"})
    trials: int = 1000
    seed: int = 0
    mode: str = "exact"
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"verifier p must be in (0, 1], got {self.p}")
        if self.p_qubits < 1 or self.a_qubits < 1:
            raise ConfigError("verifier register sizes must be >= 1")
        if self.l < 2:
            raise ConfigError(f"l must be >= 2, got {self.l}")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"mode must be exact or sampled, got {self.mode!r}")
        if self.mode == "sampled" and self.trials < 1:
            raise ConfigError(f"sampled mode needs trials >= 1, got {self.trials}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        kind = self.strategy.get("kind")
        if self.experiment == "soundness" and kind not in STRATEGY_KINDS:
            raise ConfigError(f"strategy kind must be one of {STRATEGY_KINDS}, got {kind!r}")
        if kind == "choi_product":
            q = self.strategy.get("q")
            if q is None or not 0.0 <= float(q) <= 1.0:
                raise ConfigError(f"choi_product strategy needs q in [0, 1], got {q}")
        if kind == "local_unitaries" and "unitary_seed" not in self.strategy:
            raise ConfigError("local_unitaries strategy needs unitary_seed")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance overrides: {sorted(unknown)}")

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "verifier": {"p": self.p, "p_qubits": self.p_qubits, "a_qubits": self.a_qubits},
            "l": self.l,
            "strategy": dict(self.strategy),
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
            "tolerances": dict(self.tolerances),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {"experiment", "verifier", "l", "strategy", "trials", "seed", "mode", "tolerances"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        verifier = data.get("verifier", {})
        if not isinstance(verifier, dict):
            raise ConfigError("'verifier' must be an object")
        try:
            config = cls(
                experiment=str(data["experiment"]),
                p=float(verifier.get("p", 0.75)),
                p_qubits=int(verifier.get("p_qubits", 1)),
                a_qubits=int(verifier.get("a_qubits", 1)),
                l=int(data.get("l", 2)),
                strategy=dict(data.get("strategy", {"kind": "idle_epr"})),
                trials=int(data.get("trials", 1000)),
                seed=int(data.get("seed", 0)),
                mode=str(data.get("mode", "exact")),
                tolerances=dict(data.get("tolerances", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        config.validate()
        return config


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    accept_probability: float | None
    reject_probability: float | None
    branches: dict | None
    lemma_margins: dict | None
    details: dict | None
    trial_rows: list[tuple] | None
    wall_time_ms: float
    version: str = __version__

    def failures(self) -> list[str]:
        """Invariant violations that should fail the run (CLI exit code 2)."""
        tolerances = {**DEFAULT_TOLERANCES, **self.config.get("tolerances", {})}
        found = []
        if self.branches is not None and self.config.get("mode") == "exact":
            total = sum(self.branches.values())
            if abs(total - 1.0) > tolerances["branch_sum"]:
                found.append(f"branch masses sum to {total!r}, not 1")
        if self.lemma_margins is not None:
            for name, entry in self.lemma_margins.items():
                if entry["min_margin"] < -tolerances["margin"]:
                    found.append(f"lemma {name} margin {entry['min_margin']:.3e} below -{tolerances['margin']}")
        if self.details is not None and "max_error" in self.details:
            if self.details["max_error"] > tolerances["swap"]:
                found.append(f"swap-bench max error {self.details['max_error']:.3e} above {tolerances['swap']}")
        return found


def _strategy_from_config(spec: dict) -> ProverStrategy:
    kind = spec.get("kind")
    if kind == "honest":
        return ProverStrategy.honest()
    if kind == "idle_epr":
        return ProverStrategy.idle_epr()
    if kind == "choi_product":
        return ProverStrategy.choi_product(float(spec["q"]))
    if kind == "local_unitaries":
        return ProverStrategy.local_unitaries(int(spec["unitary_seed"]))
    raise ConfigError(f"unknown strategy kind {kind!r}")


def _run_protocol_experiment(config: ExperimentConfig) -> ExperimentReport:
    toy = make_toy_verifier(config.p, config.p_qubits, config.a_qubits)
    if config.experiment == "completeness":
        proof = honest_proof(toy, config.l)
    else:
        proof = cheating_proof(_strategy_from_config(config.strategy), toy, config.l)
    run = ProtocolRun(proof, toy)
    if config.mode == "exact":
        result = run.exact()
        return ExperimentReport(
            config=config.to_dict(),
            accept_probability=result.accept_probability,
            reject_probability=result.reject_probability,
            branches=dict(result.branches),
            lemma_margins=None,
            details=None,
            trial_rows=None,
            wall_time_ms=0.0,
        )
    counts = {k: 0 for k in BRANCH_KEYS}
    accepts = 0
    rows = []
    for t in range(config.trials):
        out = run.sample(rngmod.stream(config.seed, t))
        if out.branch == "b0_postsel_fail":
            counts["b0_postsel_fail"] += 1
            postsel = "fail"
        elif out.branch == "b0_measured":
            key = "b0_allzero_reject" if out.verdict == "reject" else "b0_measured_accept"
            counts[key] += 1
            postsel = "success"
        else:
            key = "b1_swap_accept" if out.verdict == "accept" else "b1_swap_reject"
            counts[key] += 1
            postsel = ""
        if out.verdict == "accept":
            accepts += 1
        rows.append((t, out.coin, out.pair[0], out.pair[1], postsel, out.verdict))
    n = config.trials
    return ExperimentReport(
        config=config.to_dict(),
        accept_probability=accepts / n,
        reject_probability=1.0 - accepts / n,
        branches={k: counts[k] / n for k in BRANCH_KEYS},
        lemma_margins=None,
        details={"trials": n},
        trial_rows=rows,
        wall_time_ms=0.0,
    )


# ---------------------------------------------------------------------------
# Inequality suite
# ---------------------------------------------------------------------------

def _ptrace_channel(rng: np.random.Generator, n_qubits: int):
    keep = sorted(rng.choice(n_qubits, size=int(rng.integers(1, n_qubits)), replace=False))
    return lambda m: partial_trace_positions(m, n_qubits, list(keep))


def lemma_suite(trials: int, seed: int, tol: float) -> dict[str, dict]:
    """Min margin and violation count over random instances of each inequality."""
    out: dict[str, dict] = {}

    def record(name: str, margins: list[float]) -> None:
        worst = float(min(margins))
        out[name] = {
            "min_margin": worst,
            "violations": int(sum(m < -tol for m in margins)),
            "samples": len(margins),
        }

    def dims(rng: np.random.Generator) -> int:
        return int(rng.integers(2, 17))

    rng = rngmod.stream(seed, 1)
    record("holder", [
        holder_margin(random_complex_matrix(rng, d), random_complex_matrix(rng, d))
        for d in (dims(rng) for _ in range(trials))
    ])
    rng = rngmod.stream(seed, 2)
    record("triangle", [
        triangle_margin(*(random_complex_matrix(rng, d) for _ in range(3)))
        for d in (dims(rng) for _ in range(trials))
    ])
    rng = rngmod.stream(seed, 3)
    margins = []
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        channel = _ptrace_channel(rng, n)
        margins.append(monotonicity_margin(random_density(rng, 2**n), random_density(rng, 2**n), channel))
    record("monotonicity_partial_trace", margins)
    rng = rngmod.stream(seed, 4)
    record("monotonicity_pinch", [
        monotonicity_margin(random_density(rng, 4), random_density(rng, 4), pinch_phi)
        for _ in range(trials)
    ])
    rng = rngmod.stream(seed, 5)
    margins = []
    for _ in range(trials):
        d = dims(rng)
        u = random_unitary(rng, d)
        margins.append(monotonicity_margin(
            random_density(rng, d), random_density(rng, d), lambda m: u @ m @ u.conj().T
        ))
    record("monotonicity_unitary", margins)
    rng = rngmod.stream(seed, 6)
    lower, upper = [], []
    for _ in range(trials):
        d = dims(rng)
        lo, up = fvg_margins(random_density(rng, d), random_density(rng, d))
        lower.append(lo)
        upper.append(up)
    record("fvg_lower", lower)
    record("fvg_upper", upper)
    rng = rngmod.stream(seed, 7)
    margins = []
    while len(margins) < trials:
        d = dims(rng)
        rho = random_density(rng, d)
        projector = random_projector(rng, d, int(rng.integers(1, d)))
        if np.trace(rho @ projector).real >= 1.0 - 1e-6:
            continue
        margins.append(gentle_margin(rho, projector))
    record("gentle", margins)
    rng = rngmod.stream(seed, 8)
    margins = []
    for _ in range(trials):
        d = dims(rng)
        eps = float(rng.uniform(0.0, 1.0))
        bump = eps * float(rng.uniform(0.0, 1.0)) * random_density(rng, d)
        margins.append(additive_perturbation_margin(random_complex_matrix(rng, d), bump, eps))
    record("perturbation_additive", margins)
    rng = rngmod.stream(seed, 9)
    margins = []
    for _ in range(trials):
        d = dims(rng)
        eps = float(rng.uniform(0.0, 0.999))
        margins.append(mixture_perturbation_margin(random_density(rng, d), random_density(rng, d), eps))
    record("perturbation_mixture", margins)
    return out


def _run_lemma_suite(config: ExperimentConfig) -> ExperimentReport:
    margins = lemma_suite(config.trials, config.seed, config.tolerance("margin"))
    checks = sum(entry["samples"] for entry in margins.values())
    return ExperimentReport(
        config=config.to_dict(),
        accept_probability=None,
        reject_probability=None,
        branches=None,
        lemma_margins=margins,
        details={"total_checks": checks},
        trial_rows=None,
        wall_time_ms=0.0,
    )


# ---------------------------------------------------------------------------
# SWAP benchmark
# ---------------------------------------------------------------------------

def _swap_case(rho: np.ndarray, sigma: np.ndarray, k: int) -> tuple[float, float]:
    left = DensityOperator(layout(("L", k)), rho, validate=False)
    right = DensityOperator(layout(("R", k)), sigma, validate=False)
    state = tensor_product(left, right)
    circuit = swap_test(state, ["L"], ["R"])
    formula = float((1.0 + np.trace(rho @ sigma).real) / 2.0)
    return circuit, formula


def _run_swap_bench(config: ExperimentConfig) -> ExperimentReport:
    rng = rngmod.stream(config.seed, 0)
    max_error = 0.0
    for t in range(config.trials):
        k = 1 if t % 2 == 0 else 2
        circuit, formula = _swap_case(random_density(rng, 2**k), random_density(rng, 2**k), k)
        max_error = max(max_error, abs(circuit - formula))
    psi = random_pure(rng, 2)
    same, _ = _swap_case(np.outer(psi, psi.conj()), np.outer(psi, psi.conj()), 1)
    zero = np.array([[1, 0], [0, 0]], dtype=complex)
    one = np.array([[0, 0], [0, 1]], dtype=complex)
    orth, _ = _swap_case(zero, one, 1)
    return ExperimentReport(
        config=config.to_dict(),
        accept_probability=None,
        reject_probability=None,
        branches=None,
        lemma_margins=None,
        details={
            "max_error": max_error,
            "identical_pure": same,
            "orthogonal_pure": orth,
        },
        trial_rows=None,
        wall_time_ms=0.0,
    )


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Deterministic report for the configured experiment; exact mode ignores trials."""
    config.validate()
    start = time.perf_counter()
    if config.experiment in ("completeness", "soundness"):
        report = _run_protocol_experiment(config)
    elif config.experiment == "lemmas":
        report = _run_lemma_suite(config)
    else:
        report = _run_swap_bench(config)
    wall = (time.perf_counter() - start) * 1000.0
    return ExperimentReport(
        config=report.config,
        accept_probability=report.accept_probability,
        reject_probability=report.reject_probability,
        branches=report.branches,
        lemma_margins=report.lemma_margins,
        details=report.details,
        trial_rows=report.trial_rows,
        wall_time_ms=wall,
    )


def emit_report(report: ExperimentReport, fmt: str = "json", include_timing: bool = False) -> bytes:
    """Serialize a report with stable field ordering.

    Timing is excluded by default so identical (config, seed) runs emit
    identical bytes.
    """
    if fmt == "json":
        obj = {
            "version": report.version,
            "config": report.config,
            "accept_probability": report.accept_probability,
            "reject_probability": report.reject_probability,
            "branches": report.branches,
            "lemma_margins": report.lemma_margins,
            "details": report.details,
        }
        if include_timing:
            obj["wall_time_ms"] = report.wall_time_ms
        return (json.dumps(obj, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if report.trial_rows is not None:
            writer.writerow(["trial", "b", "pair_i", "pair_j", "postsel", "verdict"])
            writer.writerows(report.trial_rows)
        elif report.lemma_margins is not None:
            writer.writerow(["lemma", "min_margin", "violations", "samples"])
            for name, entry in report.lemma_margins.items():
                writer.writerow([name, repr(entry["min_margin"]), entry["violations"], entry["samples"]])
        elif report.branches is not None:
            writer.writerow(
                ["experiment", "mode", "accept_probability", "reject_probability", *BRANCH_KEYS]
            )
            writer.writerow(
                [
                    report.config["experiment"],
                    report.config["mode"],
                    repr(report.accept_probability),
                    repr(report.reject_probability),
                    *(repr(report.branches[k]) for k in BRANCH_KEYS),
                ]
            )
        else:
            writer.writerow(["check", "value"])
            for key, value in (report.details or {}).items():
                writer.writerow([key, repr(value)])
        return buf.getvalue().encode()
    raise ValueError(f"unknown report format {fmt!r}")
