"""The transmission pipeline: encode, collective noise, PBS2 (+HWP0),
decoder, post-selection, X measurement and correction.

Slot ``r`` is the reference photon (prepared in ``|+x>`` at omega_r) and
slot ``s`` the signal photon carrying ``alpha|H> + beta|V>`` at omega_s.
Each decoder port p in {3, 4} is FBS -> HWP(45 deg) on the up path ->
frequency shifter(s) or eraser -> PBS with ``down:H->x, down:V->y,
up:V->x, up:H->y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from . import elements as el
from .elements import ConfigError, MeasurementOutcome, NoiseUnitary
from .state import (
    Frequency,
    Path,
    PhotonBasis,
    Polarization,
    TwoPhotonState,
    fidelity_pure,
    polarization_amplitudes,
    require_paths,
    _wrap,
    conditional_branch,
    squared_norm,
)

H, V = Polarization.H, Polarization.V

VARIANTS = ("frequency_dual_fs", "frequency_single_fs", "temporal_eraser")

STAGES = ("encode", "noise", "post-pbs2", "pre-decoder", "final")

CHANNELS = (Path.CH1, Path.CH2)
PORTS = (Path.P3, Path.P4)
UP_PATHS = (Path.P3_UP, Path.P4_UP)
DOWN_PATHS = (Path.P3_DOWN, Path.P4_DOWN)
X_OUTPUTS = (Path.OUT_3X, Path.OUT_4X)
Y_OUTPUTS = (Path.OUT_3Y, Path.OUT_4Y)

STAGE_PATHS = {
    "encode": CHANNELS,
    "noise": CHANNELS,
    "post-pbs2": PORTS,
    "pre-decoder": PORTS,
    "final": X_OUTPUTS + Y_OUTPUTS,
}

# (x output, y output) coincidences kept by post-selection
BRANCHES = (
    (Path.OUT_3X, Path.OUT_3Y),
    (Path.OUT_4X, Path.OUT_4Y),
    (Path.OUT_3X, Path.OUT_4Y),
    (Path.OUT_4X, Path.OUT_3Y),
)

_BRANCH_PAIRS = frozenset(frozenset(b) for b in BRANCHES)

_DECODER_PORTS = (
    (Path.P3, Path.P3_UP, Path.P3_DOWN, Path.OUT_3X, Path.OUT_3Y),
    (Path.P4, Path.P4_UP, Path.P4_DOWN, Path.OUT_4X, Path.OUT_4Y),
)


@dataclass(frozen=True)
class InputQubit:
    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-9:
            raise ConfigError(f"input qubit not normalized: |alpha|^2 + |beta|^2 = {n!r}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


@dataclass(frozen=True)
class DecoderConfig:
    variant: str = "frequency_dual_fs"
    fs_efficiency: float = 1.0
    eraser_transmission: float = 0.5
    with_hwp0: bool = True

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown decoder variant {self.variant!r}")
        for name in ("fs_efficiency", "eraser_transmission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")


class CorrectionOp(NamedTuple):
    name: str
    matrix: np.ndarray


CORRECTIONS = {
    "identity": CorrectionOp("identity", el.IDENTITY),
    "sigma_x": CorrectionOp("sigma_x", el.SIGMA_X),
    "minus_i_sigma_y": CorrectionOp("minus_i_sigma_y", el.MINUS_I_SIGMA_Y),
    "sigma_z": CorrectionOp("sigma_z", el.SIGMA_Z),
}
PAULI_SET = tuple(CORRECTIONS.values())
FIXED_TABLE = {"plus_x": CORRECTIONS["sigma_x"], "minus_x": CORRECTIONS["minus_i_sigma_y"]}


@dataclass(frozen=True)
class TrialOutcome:
    kept: bool
    branch: tuple[Path, Path] | None
    measurement: str | None
    correction: CorrectionOp | None
    joint_probability: float
    output_state: np.ndarray | None = None
    fidelity: float | None = None


class BranchResult(NamedTuple):
    branch: tuple[Path, Path]
    probability: float
    state: TwoPhotonState  # slot r = x-output photon, slot s = y-output photon


def encode(q: InputQubit) -> TwoPhotonState:
    """Reference ``|+x>`` and signal qubit, both split by PBS1 onto ch1/ch2."""
    return _encode(q.alpha, q.beta)


@lru_cache(maxsize=256)
def _encode(alpha: complex, beta: complex) -> TwoPhotonState:
    # states are immutable, so repeated inputs can share the encoded state
    q = InputQubit(alpha, beta)
    amp = 1 / math.sqrt(2)
    r = [(PhotonBasis(H, Frequency.OMEGA_R, Path.SOURCE_R), amp), (PhotonBasis(V, Frequency.OMEGA_R, Path.SOURCE_R), amp)]
    s = [(PhotonBasis(H, Frequency.OMEGA_S, Path.SOURCE_S), q.alpha), (PhotonBasis(V, Frequency.OMEGA_S, Path.SOURCE_S), q.beta)]
    st = TwoPhotonState.product(r, s)
    st = el.pbs(st, (Path.SOURCE_R,), CHANNELS, passthrough=(Path.SOURCE_S,))
    st = el.pbs(st, (Path.SOURCE_S,), CHANNELS, passthrough=CHANNELS)
    return st


def apply_collective_noise(state: TwoPhotonState, u: NoiseUnitary) -> TwoPhotonState:
    require_paths(state, CHANNELS, "noise")
    return el.collective_noise(state, u, CHANNELS)


def _decode(state: TwoPhotonState, cfg: DecoderConfig) -> TwoPhotonState:
    for port, up, down, _, _ in _DECODER_PORTS:
        state = el.fbs(state, port, up, down)
    state = el.hwp(state, UP_PATHS, 45.0)
    if cfg.variant == "frequency_dual_fs":
        state = el.frequency_shifter(state, UP_PATHS + DOWN_PATHS, cfg.fs_efficiency)
    elif cfg.variant == "frequency_single_fs":
        # only the reference photon is shifted, onto the signal frequency
        state = el.frequency_shifter(state, UP_PATHS, cfg.fs_efficiency, target=Frequency.OMEGA_S)
    else:
        state = el.temporal_eraser(state, UP_PATHS + DOWN_PATHS, cfg.eraser_transmission)
    decoded = set(UP_PATHS + DOWN_PATHS)
    for _, up, down, out_x, out_y in _DECODER_PORTS:
        decoded -= {up, down}
        state = el.pbs(state, (down, up), (out_x, out_y), passthrough=decoded | set(X_OUTPUTS + Y_OUTPUTS))
    return state


def run_pipeline(
    q: InputQubit, u: NoiseUnitary, cfg: DecoderConfig
) -> tuple[TwoPhotonState, list[tuple[str, TwoPhotonState]]]:
    """Evolve one input through one noise realization.

    The trace holds snapshots named by :data:`STAGES`; ``pre-decoder``
    equals ``post-pbs2`` when HWP0 is disabled.
    """
    trace: list[tuple[str, TwoPhotonState]] = []

    def snap(name: str, st: TwoPhotonState) -> TwoPhotonState:
        require_paths(st, STAGE_PATHS[name], name)
        trace.append((name, st))
        return st

    st = snap("encode", encode(q))
    st = snap("noise", apply_collective_noise(st, u))
    st = snap("post-pbs2", el.pbs(st, CHANNELS, PORTS))
    if cfg.with_hwp0:
        st = el.hwp(st, (Path.P3,), 45.0)
    st = snap("pre-decoder", st)
    st = snap("final", _decode(st, cfg))
    return st, trace


def post_select(final_state: TwoPhotonState) -> list[BranchResult]:
    """All four x/y coincidence branches, in :data:`BRANCHES` order."""
    # one pass to bucket terms by their unordered output pair, then project
    # each (small) bucket
    buckets: dict[frozenset[Path], dict] = {}
    for key, amp in final_state:
        pair = frozenset((key[0].path, key[1].path))
        if pair in _BRANCH_PAIRS:
            buckets.setdefault(pair, {})[key] = amp
    out = []
    for x, y in BRANCHES:
        part = buckets.get(frozenset((x, y)))
        if part is None:
            out.append(BranchResult((x, y), 0.0, TwoPhotonState()))
            continue
        p, st = conditional_branch(_wrap(part), ((x,), (y,)))
        out.append(BranchResult((x, y), p, st))
    return out


def discard_probability(final_state: TwoPhotonState, branches: Sequence[BranchResult]) -> float:
    return max(0.0, squared_norm(final_state) - math.fsum(b.probability for b in branches))


def kept_photon_state(collapsed: TwoPhotonState, outcome: str) -> np.ndarray:
    """Polarization vector of the x-output photon after the y photon was
    found in ``outcome``. Returns the zero vector for an empty state."""
    vec = el.PLUS_X if outcome == "plus_x" else el.MINUS_X
    psi = polarization_amplitudes(collapsed) @ vec.conj()
    n = np.linalg.norm(psi)
    return psi / n if n > 0 else psi


def _measure(branch: BranchResult) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    return el.x_measure(branch.state, "s", branch.branch[1])


def correct_and_score(branch: BranchResult, q: InputQubit, table: dict[str, CorrectionOp] | None = None) -> tuple[TrialOutcome, TrialOutcome]:
    """Measure the y photon in X, correct the x photon, score against ``q``.

    Default table: ``+x -> sigma_x``, ``-x -> -i sigma_y``.
    """
    table = FIXED_TABLE if table is None else table
    results = []
    for m in _measure(branch):
        joint = branch.probability * m.probability
        op = table[m.basis_vector]
        if joint == 0.0:
            results.append(TrialOutcome(True, branch.branch, m.basis_vector, op, 0.0))
            continue
        out = op.matrix @ kept_photon_state(m.collapsed_state, m.basis_vector)
        results.append(
            TrialOutcome(True, branch.branch, m.basis_vector, op, joint, out, fidelity_pure(out, q.vector))
        )
    return results[0], results[1]


def analyze_recoverability(
    branch_state: TwoPhotonState,
    outcome: str,
    q: InputQubit,
    candidates: Sequence[CorrectionOp] = PAULI_SET,
) -> tuple[CorrectionOp, float]:
    """Best correction among ``candidates`` (first wins ties)."""
    if not candidates:
        raise ValueError("candidate set must not be empty")
    if not len(branch_state):
        return candidates[0], 0.0
    y_path = next(iter(branch_state.amplitudes))[1].path
    plus, minus = el.x_measure(branch_state, "s", y_path)
    m = plus if outcome == "plus_x" else minus
    if m.probability == 0.0:
        return candidates[0], 0.0
    psi = kept_photon_state(m.collapsed_state, outcome)
    best, best_f = candidates[0], -1.0
    for op in candidates:
        f = fidelity_pure(op.matrix @ psi, q.vector)
        if f > best_f + 1e-12:
            best, best_f = op, f
    return best, best_f


def entangled_target(q: InputQubit) -> np.ndarray:
    """``alpha|VV> + beta|HH>`` as a ``[pol_x, pol_y]`` matrix."""
    return np.array([[q.beta, 0], [0, q.alpha]], dtype=complex)
