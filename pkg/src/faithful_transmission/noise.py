"""Collective-noise families and reproducible per-trial sampling."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .elements import ConfigError, NoiseUnitary

KINDS = ("haar", "dephasing", "rotation", "bitflip", "fixed")


@dataclass(frozen=True)
class NoiseFamily:
    """Which unitary each trial sees.

    ``params`` holds ``phi`` (radians) for dephasing, ``theta`` (radians) for
    rotation and ``matrix`` (2x2 nested list of complex) for fixed.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("noise seed must be a 64-bit unsigned integer")
        if self.kind == "fixed":
            # validates unitarity once, up front
            _fixed(self.params)

    @property
    def deterministic(self) -> bool:
        return self.kind != "haar"


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by ``(seed, trial_index)``.

    Keying on the pair (rather than advancing a shared stream) keeps every
    trial's draw independent of execution order and worker count.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, trial_index]))


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    # first column uniform on the unit sphere of C^2, second column its
    # orthogonal complement times a uniform phase
    z = rng.standard_normal(4)
    a = complex(z[0], z[1])
    b = complex(z[2], z[3])
    n = math.hypot(abs(a), abs(b))
    a, b = a / n, b / n
    chi = cmath.exp(1j * rng.uniform(0.0, 2 * math.pi))
    return np.array([[a, -chi * b.conjugate()], [b, chi * a.conjugate()]], dtype=complex)


def _fixed(params: dict[str, Any]) -> NoiseUnitary:
    try:
        m = np.asarray(params["matrix"], dtype=complex)
    except KeyError:
        raise ConfigError("fixed noise needs a 'matrix' parameter") from None
    if m.shape != (2, 2):
        raise ConfigError(f"fixed noise matrix must be 2x2, got shape {m.shape}")
    return NoiseUnitary.from_matrix(m)


def sample(family: NoiseFamily, trial_index: int) -> NoiseUnitary:
    kind = family.kind
    if kind == "haar":
        return NoiseUnitary.from_matrix(haar_unitary(trial_rng(family.seed, trial_index)))
    if kind == "dephasing":
        phi = float(family.params.get("phi", 0.0))
        return NoiseUnitary(delta1=1, delta2=0, eta1=0, eta2=cmath.exp(1j * phi))
    if kind == "rotation":
        theta = float(family.params.get("theta", 0.0))
        c, s = math.cos(theta), math.sin(theta)
        return NoiseUnitary(delta1=c, delta2=-s, eta1=s, eta2=c)
    if kind == "bitflip":
        return NoiseUnitary(delta1=0, delta2=1, eta1=1, eta2=0)
    return _fixed(family.params)
