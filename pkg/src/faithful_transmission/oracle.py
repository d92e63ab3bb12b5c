"""Dense brute-force evolution used to cross-check the sparse pipeline.

Every single-photon label combination (2 pol x 3 freq x 14 path = 84) gets
an index; each circuit stage is an explicit 84x84 matrix ``M`` built from
the element descriptions alone, and the two-photon amplitude array evolves
as ``psi -> M psi M^T``. Nothing here goes through the sparse state code.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

POLS = ("H", "V")
FREQS = ("omega_r", "omega_s", "omega_common")
PATHS = (
    "source_r", "source_s", "ch1", "ch2", "p3", "p4",
    "p3_up", "p3_down", "p4_up", "p4_down",
    "out_3x", "out_3y", "out_4x", "out_4y",
)
DIM = len(POLS) * len(FREQS) * len(PATHS)
LABELS = list(itertools.product(POLS, FREQS, PATHS))
INDEX = {lab: i for i, lab in enumerate(LABELS)}

KEPT_BRANCHES = (("out_3x", "out_3y"), ("out_4x", "out_4y"), ("out_3x", "out_4y"), ("out_4x", "out_3y"))


def _stage(image) -> np.ndarray:
    """Matrix whose column for label ``j`` is ``image(j)``, a dict
    ``label -> amplitude``; ``None`` means the label is untouched."""
    m = np.zeros((DIM, DIM), dtype=complex)
    for lab, j in INDEX.items():
        out = image(*lab)
        if out is None:
            m[j, j] = 1.0
            continue
        for target, amp in out.items():
            m[INDEX[target], j] += amp
    return m


def _pol_op(paths, op):
    op = np.asarray(op, dtype=complex)

    def image(pol, freq, path):
        if path not in paths:
            return None
        col = POLS.index(pol)
        return {(POLS[row], freq, path): op[row, col] for row in range(2)}

    return _stage(image)


def _route(table):
    """``table[(pol, path)] -> new path``."""

    def image(pol, freq, path):
        if (pol, path) not in table:
            return None
        return {(pol, freq, table[(pol, path)]): 1.0}

    return _stage(image)


def stage_matrices(u: np.ndarray, variant: str, eta: float, t: float, with_hwp0: bool) -> list[tuple[str, np.ndarray]]:
    sx = np.array([[0, 1], [1, 0]])
    stages = [
        ("pbs1", _route({
            ("H", "source_r"): "ch1", ("V", "source_r"): "ch2",
            ("H", "source_s"): "ch1", ("V", "source_s"): "ch2",
        })),
        ("noise", _pol_op({"ch1", "ch2"}, u)),
        ("pbs2", _route({
            ("H", "ch1"): "p3", ("V", "ch1"): "p4",
            ("H", "ch2"): "p4", ("V", "ch2"): "p3",
        })),
    ]
    if with_hwp0:
        stages.append(("hwp0", _pol_op({"p3"}, sx)))

    def fbs(pol, freq, path):
        if path not in ("p3", "p4"):
            return None
        side = {"omega_r": "up", "omega_s": "down"}.get(freq)
        if side is None:
            return {}
        return {(pol, freq, f"{path}_{side}"): 1.0}

    stages.append(("fbs", _stage(fbs)))
    stages.append(("hwp_up", _pol_op({"p3_up", "p4_up"}, sx)))

    arms = {"p3_up", "p3_down", "p4_up", "p4_down"}
    if variant == "frequency_dual_fs":
        shift, targets, gain = arms, "omega_common", math.sqrt(eta)
    elif variant == "frequency_single_fs":
        shift, targets, gain = {"p3_up", "p4_up"}, "omega_s", math.sqrt(eta)
    else:
        shift, targets, gain = arms, None, math.sqrt(t)

    def lossy(pol, freq, path):
        if path not in shift:
            return None
        return {(pol, targets or freq, path): gain}

    stages.append(("fs_or_eraser", _stage(lossy)))
    table = {}
    for port in ("3", "4"):
        table.update({
            ("H", f"p{port}_down"): f"out_{port}x", ("V", f"p{port}_down"): f"out_{port}y",
            ("V", f"p{port}_up"): f"out_{port}x", ("H", f"p{port}_up"): f"out_{port}y",
        })
    stages.append(("pbs34", _route(table)))
    return stages


def initial_array(alpha: complex, beta: complex) -> np.ndarray:
    r = np.zeros(DIM, dtype=complex)
    s = np.zeros(DIM, dtype=complex)
    r[INDEX[("H", "omega_r", "source_r")]] = 1 / math.sqrt(2)
    r[INDEX[("V", "omega_r", "source_r")]] = 1 / math.sqrt(2)
    s[INDEX[("H", "omega_s", "source_s")]] = alpha
    s[INDEX[("V", "omega_s", "source_s")]] = beta
    return np.outer(r, s)


def oracle_evolve(alpha: complex, beta: complex, u: np.ndarray, variant: str = "frequency_dual_fs",
                  eta: float = 1.0, t: float = 0.5, with_hwp0: bool = True) -> np.ndarray:
    """Final two-photon state as a flat dense vector of length ``DIM**2``
    (row-major: index ``i_r * DIM + i_s``)."""
    psi = initial_array(alpha, beta)
    for _, m in stage_matrices(np.asarray(u, dtype=complex), variant, eta, t, with_hwp0):
        psi = m @ psi @ m.T
    return psi.ravel()


def branch_probabilities(final: np.ndarray) -> dict[tuple[str, str], float]:
    """Detection probability of each x/y coincidence. Amplitudes with the
    photons' slots swapped land in the same detector pair and add."""
    psi = final.reshape(DIM, DIM)
    out = {}
    for x, y in KEPT_BRANCHES:
        xs = [INDEX[(p, f, x)] for p in POLS for f in FREQS]
        ys = [INDEX[(p, f, y)] for p in POLS for f in FREQS]
        amp = psi[np.ix_(xs, ys)] + psi[np.ix_(ys, xs)].T
        out[(x, y)] = float(np.sum(np.abs(amp) ** 2))
    return out


def sparse_to_dense(state) -> np.ndarray:
    """Flatten a sparse ``TwoPhotonState`` onto the oracle's index layout."""
    psi = np.zeros((DIM, DIM), dtype=complex)
    for (br, bs), amp in state:
        i = INDEX[(br.pol.value, br.freq.value, br.path.value)]
        j = INDEX[(bs.pol.value, bs.freq.value, bs.path.value)]
        psi[i, j] += amp
    return psi.ravel()
