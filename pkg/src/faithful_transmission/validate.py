"""Built-in invariant suite run by ``fqt validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle, reference
from .noise import NoiseFamily, sample
from .protocol import (
    CORRECTIONS,
    DecoderConfig,
    InputQubit,
    analyze_recoverability,
    correct_and_score,
    entangled_target,
    post_select,
    run_pipeline,
)
from .state import Path, global_phase_fidelity, polarization_amplitudes, squared_norm

VALIDATION_SEED = 20090101


@dataclass
class Check:
    name: str
    passed: bool
    observed: str


def random_qubit(rng: np.random.Generator) -> InputQubit:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v /= np.linalg.norm(v)
    return InputQubit(complex(v[0]), complex(v[1]))


def _haar(i: int):
    return sample(NoiseFamily("haar", seed=VALIDATION_SEED), i)


def stage_regression(draws: int = 100) -> Check:
    rng = np.random.default_rng(VALIDATION_SEED)
    worst_fid, worst_dev = 1.0, 0.0
    for i in range(draws):
        q, u = random_qubit(rng), _haar(i)
        _, trace = run_pipeline(q, u, DecoderConfig())
        snaps = dict(trace)
        for stage, table in reference.TABLES.items():
            fid, dev = reference.compare(snaps[stage], table(q, u))
            worst_fid, worst_dev = min(worst_fid, fid), max(worst_dev, dev)
    ok = worst_fid > 1 - 1e-10 and worst_dev < 1e-12
    return Check(f"stage tables (post-pbs2, pre-decoder, final) x{draws}", ok,
                 f"min branch fidelity {worst_fid:.16f}, max weight deviation {worst_dev:.3g}")


def oracle_equivalence(trials: int = 100) -> Check:
    rng = np.random.default_rng(VALIDATION_SEED + 1)
    variants = [
        DecoderConfig(),
        DecoderConfig("frequency_dual_fs", fs_efficiency=0.65),
        DecoderConfig("frequency_single_fs", fs_efficiency=0.5),
        DecoderConfig("temporal_eraser", with_hwp0=True),
        DecoderConfig("temporal_eraser", with_hwp0=False),
    ]
    worst = 0.0
    for i in range(trials):
        q, u, cfg = random_qubit(rng), _haar(i), variants[i % len(variants)]
        final, _ = run_pipeline(q, u, cfg)
        dense = oracle.oracle_evolve(q.alpha, q.beta, u.matrix, cfg.variant, cfg.fs_efficiency,
                                     cfg.eraser_transmission, cfg.with_hwp0)
        worst = max(worst, float(np.max(np.abs(dense - oracle.sparse_to_dense(final)))))
        probs = oracle.branch_probabilities(dense)
        for b in post_select(final):
            worst = max(worst, abs(probs[(b.branch[0].value, b.branch[1].value)] - b.probability))
    return Check(f"dense oracle equivalence x{trials}", worst < 1e-12, f"max deviation {worst:.3g}")


def success_and_faithfulness(samples: int = 1000) -> list[Check]:
    rng = np.random.default_rng(VALIDATION_SEED + 2)
    worst_p, worst_f, worst_ent = 0.0, 0.0, 0.0
    for i in range(samples):
        q, u = random_qubit(rng), _haar(i)
        final, _ = run_pipeline(q, u, DecoderConfig())
        branches = post_select(final)
        worst_p = max(worst_p, abs(math.fsum(b.probability for b in branches) - 0.5))
        target = entangled_target(q)
        for b in branches:
            if b.probability == 0:
                continue
            worst_ent = max(worst_ent, 1 - global_phase_fidelity(polarization_amplitudes(b.state), target))
            for o in correct_and_score(b, q):
                if o.joint_probability > 0:
                    worst_f = max(worst_f, 1 - o.fidelity)
    return [
        Check(f"ideal success = 1/2 x{samples} Haar", worst_p < 1e-12, f"max |p - 1/2| {worst_p:.3g}"),
        Check(f"corrected fidelity = 1 x{samples} Haar", worst_f < 1e-10, f"max 1 - F {worst_f:.3g}"),
        Check("kept branches = alpha|VV> + beta|HH>", worst_ent < 1e-10, f"max 1 - F {worst_ent:.3g}"),
    ]


def efficiency_scaling() -> Check:
    q = InputQubit(0.6, 0.8j)
    worst = 0.0
    for i, eta in enumerate((0.0, 0.25, 0.5, 0.65, 0.75, 1.0)):
        u = _haar(i)
        for variant, expect in (("frequency_dual_fs", eta**2 / 2), ("frequency_single_fs", eta / 2)):
            final, _ = run_pipeline(q, u, DecoderConfig(variant, fs_efficiency=eta))
            worst = max(worst, abs(math.fsum(b.probability for b in post_select(final)) - expect))
    return Check("FS scaling eta^2/2 (dual), eta/2 (single)", worst < 1e-12, f"max deviation {worst:.3g}")


def temporal_baseline(samples: int = 200) -> Check:
    rng = np.random.default_rng(VALIDATION_SEED + 3)
    worst = 0.0
    for i in range(samples):
        q, u = random_qubit(rng), _haar(i)
        final, _ = run_pipeline(q, u, DecoderConfig("temporal_eraser", with_hwp0=True))
        worst = max(worst, abs(math.fsum(b.probability for b in post_select(final)) - 0.125))
    return Check(f"temporal eraser + HWP0 success = 1/8 x{samples} Haar", worst < 1e-12, f"max deviation {worst:.3g}")


def restricted_baseline() -> Check:
    q = InputQubit(0.6, 0.8j)
    u = sample(NoiseFamily("dephasing", {"phi": 0.9}), 0)
    final, _ = run_pipeline(q, u, DecoderConfig("temporal_eraser", with_hwp0=False))
    keep = {(Path.OUT_3X, Path.OUT_3Y), (Path.OUT_4X, Path.OUT_4Y)}
    kept = [b for b in post_select(final) if b.branch in keep]
    p = math.fsum(
        o.joint_probability for b in kept for o in correct_and_score(b, q) if o.measurement == "plus_x"
    )
    # the +x photon of this baseline is already the input qubit
    fid = min(
        analyze_recoverability(b.state, "plus_x", q, (CORRECTIONS["identity"],))[1]
        for b in kept if b.probability > 0
    )
    ok = abs(p - 1 / 16) < 1e-12 and fid > 1 - 1e-10
    return Check("restricted temporal baseline = 1/16, faithful (dephasing)", ok, f"p = {p!r}, fidelity {fid:.12f}")


def haar_moments(samples: int = 100_000) -> Check:
    d1 = np.array([abs(_haar(i).delta1) ** 2 for i in range(samples)])
    m2, m4 = d1.mean(), (d1**2).mean()
    se2, se4 = d1.std(ddof=1) / math.sqrt(samples), (d1**2).std(ddof=1) / math.sqrt(samples)
    z2, z4 = abs(m2 - 0.5) / se2, abs(m4 - 1 / 3) / se4
    return Check(f"Haar moments E|d1|^2=1/2, E|d1|^4=1/3 x{samples}", z2 < 4 and z4 < 4,
                 f"E|d1|^2 = {m2:.5f} ({z2:.2f} se), E|d1|^4 = {m4:.5f} ({z4:.2f} se)")


def probability_accounting(samples: int = 200) -> Check:
    rng = np.random.default_rng(VALIDATION_SEED + 4)
    worst = 0.0
    for i in range(samples):
        q, u = random_qubit(rng), _haar(i)
        cfg = DecoderConfig(("frequency_dual_fs", "frequency_single_fs", "temporal_eraser")[i % 3],
                            fs_efficiency=0.65, eraser_transmission=0.5, with_hwp0=bool(i % 2))
        final, _ = run_pipeline(q, u, cfg)
        branches = post_select(final)
        kept = math.fsum(b.probability for b in branches)
        discard = squared_norm(final) - kept
        lost = 1 - squared_norm(final)
        worst = max(worst, abs(kept + discard + lost - 1), max(0.0, -discard))
    return Check("kept + discarded + lost = 1", worst < 1e-10, f"max deviation {worst:.3g}")


SUITES: list[Callable[[], Check | list[Check]]] = [
    stage_regression,
    oracle_equivalence,
    success_and_faithfulness,
    efficiency_scaling,
    temporal_baseline,
    restricted_baseline,
    probability_accounting,
    haar_moments,
]


def run_all() -> list[Check]:
    out: list[Check] = []
    for suite in SUITES:
        res = suite()
        out.extend(res if isinstance(res, list) else [res])
    return out
