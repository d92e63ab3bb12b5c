"""Optical elements as pure functions on :class:`TwoPhotonState`.

Elements act on whichever photon occupies their input paths; photons
elsewhere pass through untouched. All routing is phase-free.

PBS convention: for ``in_paths = (a, b)`` and ``out_paths = (c, d)``,
``a:H -> c``, ``a:V -> d``, ``b:H -> d``, ``b:V -> c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .state import (
    SLOTS,
    Frequency,
    Path,
    PhotonBasis,
    Polarization,
    StageError,
    TwoPhotonState,
    apply_single_photon_op,
    basis,
    relabel,
    squared_norm,
)

_H = Polarization.H

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# -i sigma_y = |H><V| - |V><H|
MINUS_I_SIGMA_Y = np.array([[0, 1], [-1, 0]], dtype=complex)

PLUS_X = np.array([1, 1], dtype=complex) / math.sqrt(2)
MINUS_X = np.array([1, -1], dtype=complex) / math.sqrt(2)
_X_PROJECTORS = (
    ("plus_x", np.outer(PLUS_X, PLUS_X.conj())),
    ("minus_x", np.outer(MINUS_X, MINUS_X.conj())),
)


class ConfigError(ValueError):
    """Element or experiment parameter outside its domain."""


@dataclass(frozen=True)
class NoiseUnitary:
    """Collective channel ``H -> d1 H + e1 V``, ``V -> d2 H + e2 V``."""

    delta1: complex
    delta2: complex
    eta1: complex
    eta2: complex

    def __post_init__(self) -> None:
        m = self.matrix
        dev = np.max(np.abs(m.conj().T @ m - IDENTITY))
        if dev > 1e-10:
            raise ConfigError(f"noise matrix is not unitary (max |U^dag U - I| = {dev:.3g})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.delta1, self.delta2], [self.eta1, self.eta2]], dtype=complex)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "NoiseUnitary":
        m = np.asarray(m, dtype=complex)
        return cls(delta1=complex(m[0, 0]), delta2=complex(m[0, 1]), eta1=complex(m[1, 0]), eta2=complex(m[1, 1]))


@dataclass(frozen=True)
class MeasurementOutcome:
    basis_vector: str  # "plus_x" | "minus_x"
    probability: float
    collapsed_state: TwoPhotonState


def _check_support(state: TwoPhotonState, touched: Iterable[Path], passthrough: Iterable[Path], name: str) -> None:
    legal = set(touched) | set(passthrough)
    bad = state.paths() - legal
    if bad:
        names = ", ".join(sorted(p.value for p in bad))
        raise StageError(f"{name}: amplitude on path(s) {names} outside its inputs")


def pbs(
    state: TwoPhotonState,
    in_paths: Sequence[Path],
    out_paths: tuple[Path, Path],
    passthrough: Iterable[Path] = (),
) -> TwoPhotonState:
    """Polarizing beam splitter (transmit H, reflect V).

    ``in_paths`` may hold one or two ports. Any amplitude on a path that is
    neither an input nor listed in ``passthrough`` raises :class:`StageError`.
    """
    if not 1 <= len(in_paths) <= 2:
        raise ValueError("a PBS has one or two input ports")
    _check_support(state, in_paths, passthrough, "pbs")
    return relabel(state, "both", _pbs_table(tuple(in_paths), tuple(out_paths)))


@lru_cache(maxsize=64)
def _pbs_table(in_paths: tuple[Path, ...], out_paths: tuple[Path, Path]) -> dict[PhotonBasis, PhotonBasis]:
    c, d = out_paths
    h_map = {in_paths[0]: c}
    v_map = {in_paths[0]: d}
    if len(in_paths) == 2:
        h_map[in_paths[1]] = d
        v_map[in_paths[1]] = c
    return {
        basis(pol, freq, p): basis(pol, freq, (h_map if pol is _H else v_map)[p])
        for pol in Polarization for freq in Frequency for p in in_paths
    }


@lru_cache(maxsize=256)
def hwp_matrix(theta_deg: float) -> np.ndarray:
    two = math.radians(2 * theta_deg)
    c, s = math.cos(two), math.sin(two)
    m = np.array([[c, s], [s, -c]], dtype=complex)
    # exact zeros at multiples of 45 deg instead of cos(pi/2) ~ 6e-17
    m[np.abs(m) < 1e-15] = 0
    m.flags.writeable = False
    return m


def hwp(state: TwoPhotonState, path_filter: Iterable[Path], theta: float) -> TwoPhotonState:
    """Half-wave plate at ``theta`` degrees; 45 deg is sigma_x."""
    m = hwp_matrix(theta)
    paths = tuple(path_filter)
    return apply_single_photon_op(state, "both", paths, m)


def fbs(state: TwoPhotonState, in_path: Path, out_up: Path, out_down: Path) -> TwoPhotonState:
    """Frequency beam splitter: omega_r goes up, omega_s goes down."""
    routes = {Frequency.OMEGA_R: out_up, Frequency.OMEGA_S: out_down}

    def route(b):
        if b.path is not in_path:
            return b
        if b.freq not in routes:
            raise StageError(f"fbs on {in_path.value}: photon already at {b.freq.value}")
        return basis(b.pol, b.freq, routes[b.freq])

    return relabel(state, "both", route)


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


def _attenuate(state: TwoPhotonState, paths: frozenset[Path], factor: float) -> TwoPhotonState:
    return apply_single_photon_op(state, "both", paths, factor * IDENTITY)


def frequency_shifter(
    state: TwoPhotonState,
    path_filter: Iterable[Path],
    efficiency: float,
    target: Frequency = Frequency.OMEGA_COMMON,
) -> TwoPhotonState:
    """Shift photons on ``path_filter`` to ``target`` with success ``efficiency``.

    Failure is modeled as amplitude loss (factor sqrt(efficiency)).
    """
    _check_unit_interval("fs efficiency", efficiency)
    paths = frozenset(path_filter)
    shifted = relabel(state, "both", _retarget(paths, target))
    if efficiency == 1.0:
        return shifted
    return _attenuate(shifted, paths, math.sqrt(efficiency))


def _retarget(paths: frozenset[Path], target: Frequency):
    def rule(b):
        if b.path in paths:
            return basis(b.pol, target, b.path)
        return b

    return rule


def temporal_eraser(state: TwoPhotonState, path_filter: Iterable[Path], transmission: float = 0.5) -> TwoPhotonState:
    """Passive distinguishability eraser keeping a fraction ``transmission``."""
    _check_unit_interval("eraser transmission", transmission)
    if transmission == 1.0:
        return state
    return _attenuate(state, frozenset(path_filter), math.sqrt(transmission))


def collective_noise(state: TwoPhotonState, u: NoiseUnitary, paths: Iterable[Path] = (Path.CH1, Path.CH2)) -> TwoPhotonState:
    m = u.matrix
    paths = tuple(paths)
    return apply_single_photon_op(state, "both", paths, m)


def x_measure(state: TwoPhotonState, which: str, path: Path) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    """Measure one photon in the X basis.

    Outcome probabilities are relative to the input's own squared norm, so
    they add up to the branch weight. Collapsed states are renormalized.
    """
    idx = SLOTS.index(which)
    for key, _ in state:
        if key[idx].path is not path:
            raise StageError(f"x_measure: photon {which} is not confined to {path.value}")
    outcomes = []
    for name, projector in _X_PROJECTORS:
        projected = apply_single_photon_op(state, which, (path,), projector)
        p = squared_norm(projected)
        if p < 1e-30:
            outcomes.append(MeasurementOutcome(name, 0.0, TwoPhotonState()))
        else:
            outcomes.append(MeasurementOutcome(name, p, projected.scaled(1 / math.sqrt(p))))
    return outcomes[0], outcomes[1]

