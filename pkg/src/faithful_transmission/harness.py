"""Monte Carlo runner: trials over noise draws, statistics, sweeps and the
optional dense-oracle cross-check."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import oracle
from .elements import ConfigError
from .noise import NoiseFamily, sample
from .protocol import (
    BRANCHES,
    PAULI_SET,
    DecoderConfig,
    InputQubit,
    analyze_recoverability,
    correct_and_score,
    discard_probability,
    post_select,
    run_pipeline,
)
from .state import Path, squared_norm

ACCOUNTING_TOL = 1e-10
LABELED_NOTE = (
    "discard probabilities come from labeled (distinguishable-slot) photons; "
    "same-output two-photon interference in discarded branches is not modeled"
)
SWEEP_PARAMS = {"eta": "fs_efficiency", "t": "eraser_transmission"}


class InvariantError(RuntimeError):
    """A per-trial consistency check failed."""


def branch_name(branch: tuple[Path, Path]) -> str:
    return f"{branch[0].value}/{branch[1].value}"


@dataclass(frozen=True)
class ExperimentSpec:
    inputs: tuple[tuple[float, InputQubit], ...]
    noise: NoiseFamily
    decoder: DecoderConfig = DecoderConfig()
    trials: int = 1000
    seed: int = 0
    sweep: tuple[str, tuple[float, ...]] | None = None
    oracle_check: bool = False
    # "fixed": +x -> sigma_x, -x -> -i sigma_y; "adaptive": best Pauli per outcome
    correction: str = "fixed"
    branch_filter: tuple[tuple[Path, Path], ...] | None = None
    outcome_filter: tuple[str, ...] | None = None
    keep_records: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.inputs:
            raise ConfigError("at least one input qubit is required")
        total = math.fsum(w for w, _ in self.inputs)
        if abs(total - 1.0) > 1e-9 or any(w < 0 for w, _ in self.inputs):
            raise ConfigError(f"ensemble weights must be non-negative and sum to 1, got {total!r}")
        if self.correction not in ("fixed", "adaptive"):
            raise ConfigError(f"correction must be 'fixed' or 'adaptive', got {self.correction!r}")
        if self.sweep is not None:
            name, values = self.sweep
            if name not in SWEEP_PARAMS:
                raise ConfigError(f"sweep parameter must be one of {sorted(SWEEP_PARAMS)}, got {name!r}")
            if not values:
                raise ConfigError("sweep value list is empty")
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise ConfigError(f"sweep value {v} for {name} outside [0, 1]")

    @classmethod
    def pure(cls, q: InputQubit, noise: NoiseFamily, **kw: Any) -> "ExperimentSpec":
        return cls(inputs=((1.0, q),), noise=noise, **kw)

    @property
    def filtered(self) -> bool:
        return self.branch_filter is not None or self.outcome_filter is not None


@dataclass
class Report:
    success_probability: tuple[float, float]
    mean_fidelity_kept: tuple[float, float] | None
    branch_probabilities: dict[str, float]
    discard_probability: float
    lost_probability: float
    trials: int
    filtered_success_probability: tuple[float, float] | None = None
    oracle_max_deviation: float | None = None
    config: dict[str, Any] = field(default_factory=dict)
    records: list[dict[str, Any]] | None = None

    def to_dict(self) -> dict[str, Any]:
        def pair(p):
            return None if p is None else {"mean": p[0], "stderr": p[1]}

        out: dict[str, Any] = {
            "success_probability": pair(self.success_probability),
            "mean_fidelity_kept": pair(self.mean_fidelity_kept),
            "branch_probabilities": dict(self.branch_probabilities),
            "discard_probability": self.discard_probability,
            "lost_probability": self.lost_probability,
            "trials": self.trials,
            "notes": [LABELED_NOTE],
            "config": self.config,
        }
        if self.filtered_success_probability is not None:
            out["filtered_success_probability"] = pair(self.filtered_success_probability)
        if self.oracle_max_deviation is not None:
            out["oracle_max_deviation"] = self.oracle_max_deviation
        if self.records is not None:
            out["records"] = self.records
        return out


def _pure_trial(spec: ExperimentSpec, q: InputQubit, u) -> dict[str, Any]:
    final, _ = run_pipeline(q, u, spec.decoder)
    branches = post_select(final)
    norm = squared_norm(final)
    discard = discard_probability(final, branches)
    kept = math.fsum(b.probability for b in branches)
    lost = 1.0 - norm
    if abs(kept + discard + lost - 1.0) > ACCOUNTING_TOL:
        raise InvariantError(f"probability accounting off by {kept + discard + lost - 1.0:.3g}")

    outcomes = []
    for b in branches:
        for o in correct_and_score(b, q):
            if spec.correction == "adaptive" and o.joint_probability > 0:
                op, f = analyze_recoverability(b.state, o.measurement, q, PAULI_SET)
                received = o.correction.matrix.conj().T @ o.output_state
                o = replace(o, correction=op, fidelity=f, output_state=op.matrix @ received)
            outcomes.append(o)
    if abs(math.fsum(o.joint_probability for o in outcomes) - kept) > ACCOUNTING_TOL:
        raise InvariantError("measurement outcome probabilities do not add up to the branch weights")

    filtered = math.fsum(
        o.joint_probability
        for o in outcomes
        if (spec.branch_filter is None or o.branch in spec.branch_filter)
        and (spec.outcome_filter is None or o.measurement in spec.outcome_filter)
    )
    weighted_fid = math.fsum(o.joint_probability * o.fidelity for o in outcomes if o.joint_probability > 0)

    dev = None
    if spec.oracle_check:
        dense = oracle.oracle_evolve(
            q.alpha, q.beta, u.matrix, spec.decoder.variant,
            spec.decoder.fs_efficiency, spec.decoder.eraser_transmission, spec.decoder.with_hwp0,
        )
        dev = float(np.max(np.abs(dense - oracle.sparse_to_dense(final))))
        dense_probs = oracle.branch_probabilities(dense)
        for b in branches:
            dev = max(dev, abs(dense_probs[(b.branch[0].value, b.branch[1].value)] - b.probability))

    return {
        "success": kept,
        "weighted_fidelity": weighted_fid,
        "branches": {branch_name(b.branch): b.probability for b in branches},
        "discard": discard,
        "lost": lost,
        "filtered": filtered,
        "oracle_dev": dev,
        "outcomes": outcomes,
    }


def run_trial(spec: ExperimentSpec, index: int) -> dict[str, Any]:
    """One noise draw, averaged over the input ensemble."""
    u = sample(spec.noise, index)
    parts = [(w, _pure_trial(spec, q, u)) for w, q in spec.inputs]

    def mix(key):
        return math.fsum(w * p[key] for w, p in parts)

    success = mix("success")
    devs = [p["oracle_dev"] for _, p in parts if p["oracle_dev"] is not None]
    row = {
        "trial": index,
        "success": success,
        "fidelity": mix("weighted_fidelity") / success if success > 0 else None,
        "branches": {branch_name(b): math.fsum(w * p["branches"][branch_name(b)] for w, p in parts) for b in BRANCHES},
        "discard": mix("discard"),
        "lost": mix("lost"),
        "filtered": mix("filtered"),
        "oracle_dev": max(devs) if devs else None,
    }
    if spec.keep_records:
        row["noise"] = [[_cpx(z) for z in r] for r in u.matrix.tolist()]
        row["outcomes"] = [
            {
                "input": i,
                "branch": branch_name(o.branch),
                "measurement": o.measurement,
                "correction": o.correction.name,
                "joint_probability": o.joint_probability,
                "fidelity": o.fidelity,
            }
            for i, (_, p) in enumerate(parts)
            for o in p["outcomes"]
        ]
    return row


def _cpx(z: complex) -> dict[str, float]:
    return {"re": z.real, "im": z.imag}


def mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and standard error (``ddof=1``); stderr is 0 for n=1."""
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _run_trials(spec: ExperimentSpec, jobs: int) -> list[dict[str, Any]]:
    indices = range(spec.trials)
    if jobs <= 1 or spec.trials == 1:
        return [run_trial(spec, i) for i in indices]
    chunk = max(1, spec.trials // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_trial, [spec] * spec.trials, indices, chunksize=chunk))


def run_experiment(spec: ExperimentSpec, jobs: int = 1, config_echo: dict[str, Any] | None = None) -> Report:
    """Run ``spec.trials`` trials and aggregate them.

    ``jobs`` only changes how trials are scheduled; each trial's noise is
    keyed by ``(seed, trial_index)`` and sums are exact (``math.fsum``),
    so the report does not depend on it.
    """
    rows = _run_trials(spec, jobs)
    fids = [r["fidelity"] for r in rows if r["fidelity"] is not None]
    devs = [r["oracle_dev"] for r in rows if r["oracle_dev"] is not None]
    n = len(rows)
    records = None
    if spec.keep_records:
        records = [{k: v for k, v in r.items() if k != "oracle_dev"} for r in rows]
    return Report(
        success_probability=mean_stderr([r["success"] for r in rows]),
        mean_fidelity_kept=mean_stderr(fids) if fids else None,
        branch_probabilities={
            branch_name(b): math.fsum(r["branches"][branch_name(b)] for r in rows) / n for b in BRANCHES
        },
        discard_probability=math.fsum(r["discard"] for r in rows) / n,
        lost_probability=math.fsum(r["lost"] for r in rows) / n,
        trials=n,
        filtered_success_probability=mean_stderr([r["filtered"] for r in rows]) if spec.filtered else None,
        oracle_max_deviation=max(devs) if spec.oracle_check else None,
        config=config_echo or {},
        records=records,
    )


def sweep(spec: ExperimentSpec, jobs: int = 1) -> list[tuple[float, Report]]:
    """One report per value of ``spec.sweep``, in the given order."""
    if spec.sweep is None:
        raise ConfigError("spec has no sweep section")
    name, values = spec.sweep
    attr = SWEEP_PARAMS[name]
    out = []
    for v in values:
        point = replace(spec, sweep=None, decoder=replace(spec.decoder, **{attr: float(v)}))
        out.append((v, run_experiment(point, jobs=jobs)))
    return out


def oracle_evolve(q: InputQubit, u, cfg: DecoderConfig) -> np.ndarray:
    """Dense final state for one run, same arguments as ``run_pipeline``."""
    return oracle.oracle_evolve(q.alpha, q.beta, u.matrix, cfg.variant, cfg.fs_efficiency, cfg.eraser_transmission, cfg.with_hwp0)
