"""Sparse amplitude maps over labeled two-photon basis states.

Each photon carries three discrete labels (polarization, frequency, path).
The two photons stay distinguishable by slot: slot ``"r"`` is the reference
photon and slot ``"s"`` the signal photon, until post-selection re-binds the
slots to detection modes (see :func:`conditional_branch`).

States are immutable; every operation returns a new state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple

import numpy as np

PRUNE_THRESHOLD = 1e-15
ATOL = 1e-12
NORM_SLACK = 1e-12


class StageError(ValueError):
    """Amplitude found somewhere a circuit stage does not allow."""


class Polarization(str, Enum):
    H = "H"
    V = "V"

    # Enum.__hash__ is pure Python; labels are hashed in every dict lookup
    __hash__ = str.__hash__

    @property
    def index(self) -> int:
        return _POL_INDEX[self]


class Frequency(str, Enum):
    OMEGA_R = "omega_r"
    OMEGA_S = "omega_s"
    OMEGA_COMMON = "omega_common"

    __hash__ = str.__hash__


class Path(str, Enum):
    SOURCE_R = "source_r"
    SOURCE_S = "source_s"
    CH1 = "ch1"
    CH2 = "ch2"
    P3 = "p3"
    P4 = "p4"
    P3_UP = "p3_up"
    P3_DOWN = "p3_down"
    P4_UP = "p4_up"
    P4_DOWN = "p4_down"
    OUT_3X = "out_3x"
    OUT_3Y = "out_3y"
    OUT_4X = "out_4x"
    OUT_4Y = "out_4y"

    __hash__ = str.__hash__


POLS = (Polarization.H, Polarization.V)
_POL_INDEX = {Polarization.H: 0, Polarization.V: 1}
SLOTS = ("r", "s")


class PhotonBasis(NamedTuple):
    pol: Polarization
    freq: Frequency
    path: Path

    def with_pol(self, pol: Polarization) -> "PhotonBasis":
        return basis(pol, self.freq, self.path)

    def sort_key(self) -> tuple[str, str, str]:
        return (self.path.value, self.freq.value, self.pol.value)

    def __str__(self) -> str:
        return f"({self.pol.value}, {self.freq.value}, {self.path.value})"


Key = tuple[PhotonBasis, PhotonBasis]

_INTERN: dict[tuple[Polarization, Frequency, Path], PhotonBasis] = {}


def basis(pol: Polarization, freq: Frequency, path: Path) -> PhotonBasis:
    """Shared :class:`PhotonBasis` instance for a label triple (there are
    only 84, and constructing named tuples dominates the inner loops)."""
    b = _INTERN.get((pol, freq, path))
    if b is None:
        b = _INTERN[(pol, freq, path)] = PhotonBasis(pol, freq, path)
    return b


def _slots(which: str) -> tuple[int, ...]:
    if which == "both":
        return (0, 1)
    if which not in SLOTS:
        raise ValueError(f"photon slot must be 'r', 's' or 'both', got {which!r}")
    return (SLOTS.index(which),)


def _prune(amps: Mapping[Key, complex]) -> dict[Key, complex]:
    return {k: v for k, v in amps.items() if abs(v) >= PRUNE_THRESHOLD}


@dataclass(frozen=True)
class TwoPhotonState:
    """Finite map ``(photon r basis, photon s basis) -> complex amplitude``.

    Entries below :data:`PRUNE_THRESHOLD` in magnitude are dropped on
    construction.
    """

    amplitudes: Mapping[Key, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        pruned = _prune(self.amplitudes)
        object.__setattr__(self, "amplitudes", MappingProxyType(pruned))
        if sum(abs(v) ** 2 for v in pruned.values()) > 1 + NORM_SLACK:
            raise ValueError("squared norm exceeds 1")

    @classmethod
    def product(
        cls,
        r: Iterable[tuple[PhotonBasis, complex]],
        s: Iterable[tuple[PhotonBasis, complex]],
    ) -> "TwoPhotonState":
        s = list(s)
        amps: dict[Key, complex] = {}
        for br, ar in r:
            for bs, as_ in s:
                amps[(br, bs)] = amps.get((br, bs), 0) + ar * as_
        return cls(amps)

    def __iter__(self) -> Iterator[tuple[Key, complex]]:
        return iter(self.amplitudes.items())

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __add__(self, other: "TwoPhotonState") -> "TwoPhotonState":
        amps = dict(self.amplitudes)
        for k, v in other.amplitudes.items():
            amps[k] = amps.get(k, 0) + v
        return _unchecked(amps)

    def scaled(self, factor: complex) -> "TwoPhotonState":
        return _unchecked({k: factor * v for k, v in self.amplitudes.items()})

    def amplitude(self, r: PhotonBasis, s: PhotonBasis) -> complex:
        return self.amplitudes.get((r, s), 0j)

    def paths(self) -> set[Path]:
        return {b.path for key in self.amplitudes for b in key}

    def sorted_items(self) -> list[tuple[Key, complex]]:
        return sorted(
            self.amplitudes.items(),
            key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key()),
        )


def _wrap(amps: dict[Key, complex]) -> TwoPhotonState:
    # caller guarantees the map is already pruned
    st = object.__new__(TwoPhotonState)
    object.__setattr__(st, "amplitudes", MappingProxyType(amps))
    return st


def _unchecked(amps: Mapping[Key, complex]) -> TwoPhotonState:
    # linear combinations of valid states may transiently exceed norm 1
    return _wrap(_prune(amps))


def squared_norm(state: TwoPhotonState) -> float:
    return math.fsum(abs(v) ** 2 for v in state.amplitudes.values())


def fidelity_pure(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for two normalized polarization vectors."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    for name, v in (("a", a), ("b", b)):
        if abs(np.vdot(v, v).real - 1.0) > 1e-9:
            raise ValueError(f"fidelity input {name} is not normalized")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def apply_single_photon_op(
    state: TwoPhotonState,
    which: str,
    path_filter: Iterable[Path],
    op: np.ndarray,
) -> TwoPhotonState:
    """Apply a 2x2 polarization operator to a photon wherever it sits on
    one of ``path_filter``. Columns of ``op`` are the images of H and V.

    ``which`` is ``"r"``, ``"s"`` or ``"both"`` (the same op on each photon).
    """
    paths = frozenset(path_filter)
    if not paths:
        raise ValueError("path_filter must not be empty")
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"single-photon op must be 2x2, got {op.shape}")
    cols = [[(pol, c) for pol, c in zip(POLS, col) if c != 0] for col in op.T.tolist()]
    slots = _slots(which)
    if all(len(c) == 1 and c[0][1] == 1 for c in cols):
        # unit permutation (e.g. HWP at 45 deg): a pure relabel
        swap = {POLS[i]: c[0][0] for i, c in enumerate(cols)}
        table = {basis(pol, f, p): basis(swap[pol], f, p) for pol in POLS for f in Frequency for p in paths}
        return relabel(state, which, table)
    do_r, do_s = 0 in slots, 1 in slots
    cache: dict[PhotonBasis, tuple[tuple[PhotonBasis, complex], ...]] = {}

    def image(b: PhotonBasis) -> tuple[tuple[PhotonBasis, complex], ...]:
        if b.path in paths:
            img = tuple((basis(pol, b.freq, b.path), c) for pol, c in cols[_POL_INDEX[b.pol]])
        else:
            img = ((b, 1.0),)
        cache[b] = img
        return img

    out: dict[Key, complex] = {}
    get = out.get
    for (br, bs), amp in state.amplitudes.items():
        ir = (cache.get(br) or image(br)) if do_r else ((br, 1.0),)
        is_ = (cache.get(bs) or image(bs)) if do_s else ((bs, 1.0),)
        for nr, cr in ir:
            for ns, cs in is_:
                k = (nr, ns)
                out[k] = get(k, 0) + cr * cs * amp
    return _unchecked(out)


Rule = Callable[[PhotonBasis], PhotonBasis]


def relabel(state: TwoPhotonState, which: str, rule: Rule | Mapping[PhotonBasis, PhotonBasis]) -> TwoPhotonState:
    """Rewrite photon labels with ``rule`` (``which`` as in
    :func:`apply_single_photon_op`).

    ``rule`` is either a function on :class:`PhotonBasis` or a partial
    mapping (unlisted labels are left alone). A rule that sends two labels
    one photon carries in the state to a single label is rejected, since
    that would merge distinct amplitudes.
    """
    slots = _slots(which)
    amps = state.amplitudes
    labels = {key[i] for key in amps for i in slots}
    # a label maps the same way whichever photon carries it
    if callable(rule):
        images = {b: rule(b) for b in labels}
    else:
        get = rule.get
        images = {b: get(b, b) for b in labels}
    if len(set(images.values())) != len(images):
        # r and s may legitimately share an image; only a merge within one
        # slot is an error
        for i in slots:
            present = {key[i] for key in amps}
            if len({images[b] for b in present}) != len(present):
                _raise_collision({b: images[b] for b in present})
    if len(slots) == 2:
        out = {(images[br], images[bs]): amp for (br, bs), amp in amps.items()}
    elif slots[0] == 0:
        out = {(images[br], bs): amp for (br, bs), amp in amps.items()}
    else:
        out = {(br, images[bs]): amp for (br, bs), amp in amps.items()}
    return _wrap(out)


def _raise_collision(images: Mapping[PhotonBasis, PhotonBasis]) -> None:
    seen: dict[PhotonBasis, PhotonBasis] = {}
    for src in sorted(images, key=PhotonBasis.sort_key):
        dst = images[src]
        if dst in seen:
            raise ValueError(f"relabel rule is not injective: {seen[dst]} and {src} both map to {dst}")
        seen[dst] = src


def path_rule(mapping: Mapping[Path, Path], pol: Polarization | None = None) -> Rule:
    """Route ``path -> mapping[path]``, optionally only for one polarization."""

    def rule(b: PhotonBasis) -> PhotonBasis:
        if b.path in mapping and (pol is None or b.pol is pol):
            return basis(b.pol, b.freq, mapping[b.path])
        return b

    return rule


def freq_rule(mapping: Mapping[Frequency, Frequency], paths: Iterable[Path] | None = None) -> Rule:
    allowed = None if paths is None else frozenset(paths)

    def rule(b: PhotonBasis) -> PhotonBasis:
        if b.freq in mapping and (allowed is None or b.path in allowed):
            return basis(b.pol, mapping[b.freq], b.path)
        return b

    return rule


def require_paths(state: TwoPhotonState, allowed: Iterable[Path], stage: str) -> None:
    allowed = frozenset(allowed)
    bad = state.paths() - allowed
    if bad:
        names = ", ".join(sorted(p.value for p in bad))
        raise StageError(f"stage {stage!r}: amplitude on illegal path(s) {names}")


PathPredicate = Callable[[Path], bool] | Iterable[Path]


def _as_predicate(p: PathPredicate) -> Callable[[Path], bool]:
    if callable(p):
        return p
    members = frozenset(p)
    return lambda path: path in members


def conditional_branch(
    state: TwoPhotonState,
    pattern: tuple[PathPredicate, PathPredicate],
) -> tuple[float, TwoPhotonState]:
    """Project onto terms with one photon matching each predicate.

    A term matches if (r, s) satisfy (first, second) or (second, first).
    In the returned state slot ``r`` holds the photon matching the first
    predicate and slot ``s`` the one matching the second; swapped terms are
    re-keyed and added coherently, since the decoder has erased which
    photon is which. Returns ``(probability, renormalized state)``; a
    zero-probability branch yields an empty state.
    """
    sub: dict[Key, complex] = {}
    if callable(pattern[0]) or callable(pattern[1]):
        first, second = (_as_predicate(p) for p in pattern)
        for (br, bs), amp in state.amplitudes.items():
            if first(br.path) and second(bs.path):
                key = (br, bs)
            elif first(bs.path) and second(br.path):
                key = (bs, br)
            else:
                continue
            sub[key] = sub.get(key, 0) + amp
    else:
        a, b = frozenset(pattern[0]), frozenset(pattern[1])
        for (br, bs), amp in state.amplitudes.items():
            if br.path in a and bs.path in b:
                key = (br, bs)
            elif bs.path in a and br.path in b:
                key = (bs, br)
            else:
                continue
            sub[key] = sub.get(key, 0) + amp
    branch = _unchecked(sub)
    prob = squared_norm(branch)
    if prob < PRUNE_THRESHOLD**2:
        return 0.0, TwoPhotonState()
    return prob, branch.scaled(1 / math.sqrt(prob))


def polarization_amplitudes(state: TwoPhotonState) -> np.ndarray:
    """2x2 matrix ``M[pol_r, pol_s]`` summed over frequency and path labels.

    This is the detector-level view once both photons sit in fixed output
    modes with no resolvable frequency difference.
    """
    m = np.zeros((2, 2), dtype=complex)
    for (br, bs), amp in state.amplitudes.items():
        m[_POL_INDEX[br.pol], _POL_INDEX[bs.pol]] += amp
    return m


def global_phase_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized ``|<a|b>|^2 / (<a|a><b|b>)`` for arbitrary-shape arrays."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))
