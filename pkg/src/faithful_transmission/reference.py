"""Hand-transcribed closed-form amplitude tables for the ideal protocol.

Keys are ``(r_pol, r_path, s_pol, s_path)``; values are the coefficients
before the overall ``1/sqrt(2)``. Frequency labels are not part of the key.
These tables are typed in from the analytic derivation, not generated by
the simulator, so that the simulator can be checked against them.
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .protocol import InputQubit
from .elements import NoiseUnitary
from .state import TwoPhotonState

TermKey = tuple[str, str, str, str]


def post_pbs2_terms(q: InputQubit, u: NoiseUnitary) -> dict[TermKey, complex]:
    a, b = q.alpha, q.beta
    d1, d2, e1, e2 = u.delta1, u.delta2, u.eta1, u.eta2
    return {
        ("H", "p3", "H", "p3"): a * d1**2,
        ("V", "p3", "V", "p3"): b * e2**2,
        ("V", "p3", "H", "p3"): d1 * e2 * a,
        ("H", "p3", "V", "p3"): d1 * e2 * b,
        ("V", "p4", "V", "p4"): a * e1**2,
        ("H", "p4", "H", "p4"): b * d2**2,
        ("H", "p4", "V", "p4"): e1 * d2 * a,
        ("V", "p4", "H", "p4"): e1 * d2 * b,
        ("H", "p3", "V", "p4"): a * d1 * e1,
        ("V", "p4", "H", "p3"): a * d1 * e1,
        ("H", "p4", "H", "p3"): d1 * d2 * a,
        ("H", "p3", "H", "p4"): d1 * d2 * b,
        ("H", "p4", "V", "p3"): b * d2 * e2,
        ("V", "p3", "H", "p4"): b * d2 * e2,
        ("V", "p3", "V", "p4"): e1 * e2 * a,
        ("V", "p4", "V", "p3"): e1 * e2 * b,
    }


def pre_decoder_terms(q: InputQubit, u: NoiseUnitary) -> dict[TermKey, complex]:
    a, b = q.alpha, q.beta
    d1, d2, e1, e2 = u.delta1, u.delta2, u.eta1, u.eta2
    return {
        ("V", "p3", "V", "p3"): a * d1**2,
        ("H", "p3", "H", "p3"): b * e2**2,
        ("V", "p4", "V", "p4"): a * e1**2,
        ("H", "p4", "H", "p4"): b * d2**2,
        ("V", "p3", "V", "p4"): a * d1 * e1,
        ("V", "p4", "V", "p3"): a * d1 * e1,
        ("H", "p3", "H", "p4"): b * d2 * e2,
        ("H", "p4", "H", "p3"): b * d2 * e2,
        ("H", "p3", "V", "p3"): d1 * e2 * a,
        ("V", "p3", "H", "p3"): d1 * e2 * b,
        ("H", "p4", "V", "p4"): e1 * d2 * a,
        ("V", "p4", "H", "p4"): e1 * d2 * b,
        ("H", "p4", "V", "p3"): d1 * d2 * a,
        ("V", "p3", "H", "p4"): d1 * d2 * b,
        ("H", "p3", "V", "p4"): e1 * e2 * a,
        ("V", "p4", "H", "p3"): e1 * e2 * b,
    }


def final_terms(q: InputQubit, u: NoiseUnitary) -> dict[TermKey, complex]:
    a, b = q.alpha, q.beta
    d1, d2, e1, e2 = u.delta1, u.delta2, u.eta1, u.eta2
    return {
        ("H", "out_3y", "V", "out_3y"): a * d1**2,
        ("V", "out_3x", "H", "out_3x"): b * e2**2,
        ("H", "out_4y", "V", "out_4y"): a * e1**2,
        ("V", "out_4x", "H", "out_4x"): b * d2**2,
        ("H", "out_3y", "V", "out_4y"): a * d1 * e1,
        ("H", "out_4y", "V", "out_3y"): a * d1 * e1,
        ("V", "out_3x", "H", "out_4x"): b * d2 * e2,
        ("V", "out_4x", "H", "out_3x"): b * d2 * e2,
        ("V", "out_3x", "V", "out_3y"): d1 * e2 * a,
        ("H", "out_3y", "H", "out_3x"): d1 * e2 * b,
        ("V", "out_4x", "V", "out_4y"): e1 * d2 * a,
        ("H", "out_4y", "H", "out_4x"): e1 * d2 * b,
        ("V", "out_4x", "V", "out_3y"): d1 * d2 * a,
        ("H", "out_3y", "H", "out_4x"): d1 * d2 * b,
        ("V", "out_3x", "V", "out_4y"): e1 * e2 * a,
        ("H", "out_4y", "H", "out_3x"): e1 * e2 * b,
    }


TABLES = {
    "post-pbs2": post_pbs2_terms,
    "pre-decoder": pre_decoder_terms,
    "final": final_terms,
}


def state_terms(state: TwoPhotonState) -> dict[TermKey, complex]:
    out: dict[TermKey, complex] = defaultdict(complex)
    for (br, bs), amp in state:
        out[(br.pol.value, br.path.value, bs.pol.value, bs.path.value)] += amp
    return dict(out)


def compare(state: TwoPhotonState, table: dict[TermKey, complex]) -> tuple[float, float]:
    """Compare a simulated stage with a reference table, branch by branch.

    Terms are grouped by their unordered path pair. Returns
    ``(min per-branch fidelity, max per-branch weight deviation)``; the
    fidelity is global-phase insensitive within each branch.
    """
    scale = 1 / math.sqrt(2)
    sim = state_terms(state)
    ref = {k: scale * v for k, v in table.items()}
    groups: dict[tuple[str, str], list[TermKey]] = defaultdict(list)
    for k in set(sim) | set(ref):
        groups[tuple(sorted((k[1], k[3])))].append(k)
    min_fid, max_dev = 1.0, 0.0
    for keys in groups.values():
        keys.sort()
        x = np.array([sim.get(k, 0) for k in keys])
        y = np.array([ref.get(k, 0) for k in keys])
        wx, wy = np.vdot(x, x).real, np.vdot(y, y).real
        max_dev = max(max_dev, abs(wx - wy))
        if wx < 1e-24 and wy < 1e-24:
            continue
        fid = abs(np.vdot(y, x)) ** 2 / (wx * wy) if wx > 0 and wy > 0 else 0.0
        min_fid = min(min_fid, float(fid))
    return min_fid, max_dev
