"""Lennard-Jones 12-6 and hydrogen-bond 12-10 pair energies.

Coordinates are handled as flat ``3N`` vectors (atom ``i`` occupies entries
``3i, 3i+1, 3i+2``) or equivalently as ``(N, 3)`` arrays.  Interactions are
only evaluated for pairs named in a :class:`PairList`, except for
:func:`lj_total` which sums over every unordered pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import SingularityError
from .pdb_io import Structure

DISTANCE_FLOOR = 1e-6
DEFAULT_HB_CUTOFF = 3.5
VDW, HBOND = "vdw", "hbond"


@dataclass(frozen=True)
class LJParams:
    """12-6 parameters.  Reduced units (epsilon = sigma = 1) by default."""

    epsilon: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and self.sigma > 0):
            raise ValueError("epsilon and sigma must be positive")

    @property
    def A(self) -> float:
        return 4.0 * self.epsilon * self.sigma**12

    @property
    def B(self) -> float:
        return 4.0 * self.epsilon * self.sigma**6

    @classmethod
    def from_ab(cls, A: float, B: float) -> LJParams:
        if not (A > 0 and B > 0):
            raise ValueError("A and B must be positive")
        return cls(epsilon=B * B / (4.0 * A), sigma=(A / B) ** (1.0 / 6.0))

    @property
    def r_min(self) -> float:
        return 2.0 ** (1.0 / 6.0) * self.sigma


def _hb_coefficients(depth: float, r0: float) -> tuple[float, float]:
    return 5.0 * depth * r0**12, 6.0 * depth * r0**10


_DEFAULT_C, _DEFAULT_D = _hb_coefficients(1.0, 2.9)


@dataclass(frozen=True)
class HBParams:
    """12-10 parameters ``C / r**12 - D / r**10``.

    The defaults place the well (depth 1) at an N...O distance of 2.9 A.
    """

    C: float = _DEFAULT_C
    D: float = _DEFAULT_D

    def __post_init__(self):
        if not self.C > 0 or self.D < 0:
            raise ValueError("C must be positive and D non-negative")

    @classmethod
    def from_well(cls, depth: float, r0: float) -> HBParams:
        return cls(*_hb_coefficients(depth, r0))

    @property
    def r_min(self) -> float:
        return math.sqrt(6.0 * self.C / (5.0 * self.D))

    @property
    def depth(self) -> float:
        return self.D / (6.0 * self.r_min**10)


@dataclass(frozen=True)
class PairList:
    pairs: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self):
        cleaned = []
        seen = set()
        for i, j, kind in self.pairs:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"pair ({i}, {j}) pairs an atom with itself")
            if kind not in (VDW, HBOND):
                raise ValueError(f"unknown pair kind {kind!r}")
            key = (min(i, j), max(i, j), kind)
            if key in seen:
                raise ValueError(f"duplicate {kind} pair ({i}, {j})")
            seen.add(key)
            cleaned.append((i, j, kind))
        object.__setattr__(self, "pairs", tuple(cleaned))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __add__(self, other: PairList) -> PairList:
        return PairList(self.pairs + other.pairs)

    def of_kind(self, kind: str) -> np.ndarray:
        return self._arrays[kind]

    @cached_property
    def _arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for kind in (VDW, HBOND):
            rows = [(i, j) for i, j, k in self.pairs if k == kind]
            out[kind] = np.array(rows, dtype=int).reshape(-1, 2)
        return out

    @property
    def max_index(self) -> int:
        return max((max(i, j) for i, j, _ in self.pairs), default=-1)


def all_pairs(n_atoms: int, kind: str = VDW) -> PairList:
    return PairList(tuple((i, j, kind) for j in range(n_atoms) for i in range(j)))


class EnergyBreakdown(NamedTuple):
    vdw: float
    hbond: float
    total: float


@dataclass(frozen=True)
class EnergyParams:
    lj: LJParams = field(default_factory=LJParams)
    hb: HBParams = field(default_factory=HBParams)
    hb_cutoff: float = DEFAULT_HB_CUTOFF


# ------------------------------------------------------------------ helpers


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.size % 3:
            raise ValueError(f"flat coordinate vector length {x.size} is not a multiple of 3")
        return x.reshape(-1, 3)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError(f"expected (N, 3) coordinates, got shape {x.shape}")
    return x


def _check_pair(r: float, i: int = 0, j: int = 1):
    if not r > DISTANCE_FLOOR:
        raise SingularityError(i, j, r)


def _pair_geometry(X: np.ndarray, idx: np.ndarray):
    """Displacements ``X[i] - X[j]`` and squared distances, with floor check."""
    if len(idx) and idx.max() >= len(X):
        raise IndexError(f"pair index {int(idx.max())} out of range for {len(X)} atoms")
    d = X[idx[:, 0]] - X[idx[:, 1]]
    r2 = np.einsum("ij,ij->i", d, d)
    if len(r2):
        k = int(np.argmin(r2))
        if not r2[k] > DISTANCE_FLOOR**2:
            raise SingularityError(int(idx[k, 0]), int(idx[k, 1]), float(np.sqrt(r2[k])))
    return d, r2


def _twelve_six(r2: np.ndarray, A: float, B: float) -> np.ndarray:
    inv6 = 1.0 / (r2 * r2 * r2)
    return A * inv6 * inv6 - B * inv6


def _twelve_ten(r2: np.ndarray, C: float, D: float) -> np.ndarray:
    inv2 = 1.0 / r2
    inv10 = inv2**5
    return C * inv10 * inv2 - D * inv10


# ------------------------------------------------------------------ energies


def lj_pair(params: LJParams, r: float) -> float:
    """``4 eps [(sigma/r)^12 - (sigma/r)^6]``, i.e. ``A/r^12 - B/r^6``."""
    _check_pair(r)
    sr6 = (params.sigma / r) ** 6
    return 4.0 * params.epsilon * (sr6 * sr6 - sr6)


def hb_pair(params: HBParams, r: float) -> float:
    _check_pair(r)
    return params.C / r**12 - params.D / r**10


def lj_total(x, params: LJParams = LJParams()) -> float:
    """LJ energy summed over all unordered atom pairs.

    In reduced units this is ``4 * sum_{i<j} (1/tau^6 - 1/tau^3)`` with
    ``tau`` the squared pair distance.
    """
    X = _points(x)
    n = len(X)
    if n < 2:
        return 0.0
    j, i = np.triu_indices(n, k=1)
    idx = np.stack([i, j], axis=1)
    _, r2 = _pair_geometry(X, idx)
    return float(np.sum(_twelve_six(r2, params.A, params.B)))


def lj_pairlist(x, params: LJParams, pl: PairList) -> float:
    X = _points(x)
    _, r2 = _pair_geometry(X, pl.of_kind(VDW))
    return float(np.sum(_twelve_six(r2, params.A, params.B)))


def hb_pairlist(x, params: HBParams, pl: PairList) -> float:
    X = _points(x)
    _, r2 = _pair_geometry(X, pl.of_kind(HBOND))
    return float(np.sum(_twelve_ten(r2, params.C, params.D)))


def energy_breakdown(x, lj: LJParams, hb: HBParams, pl: PairList) -> EnergyBreakdown:
    vdw = lj_pairlist(x, lj, pl)
    hbond = hb_pairlist(x, hb, pl)
    return EnergyBreakdown(vdw, hbond, vdw + hbond)


def total_energy(s: Structure, lj: LJParams, hb: HBParams, pl: PairList) -> EnergyBreakdown:
    """Score ``pl`` against the canonical atom ordering of ``s``."""
    if pl.max_index >= s.n_atoms:
        raise IndexError(f"pair index {pl.max_index} out of range for {s.n_atoms} atoms")
    return energy_breakdown(s.coordinates(), lj, hb, pl)


# ------------------------------------------------------------------ gradients


def _accumulate(n: int, idx: np.ndarray, coeff: np.ndarray, d: np.ndarray) -> np.ndarray:
    G = np.zeros((n, 3))
    g = coeff[:, None] * d
    np.add.at(G, idx[:, 0], g)
    np.add.at(G, idx[:, 1], -g)
    return G


def gradient(x, lj: LJParams, pl: PairList) -> np.ndarray:
    """Analytic gradient of :func:`lj_pairlist`, flattened to ``3N``.

    Pair (i, j) with displacement ``d = x_i - x_j`` contributes
    ``(-12 A / r^14 + 6 B / r^8) d`` to atom i and the negation to atom j.
    """
    X = _points(x)
    idx = pl.of_kind(VDW)
    d, r2 = _pair_geometry(X, idx)
    inv6 = 1.0 / (r2 * r2 * r2)
    coeff = (-12.0 * lj.A * inv6 * inv6 + 6.0 * lj.B * inv6) / r2
    return _accumulate(len(X), idx, coeff, d).ravel()


def hb_gradient(x, hb: HBParams, pl: PairList) -> np.ndarray:
    X = _points(x)
    idx = pl.of_kind(HBOND)
    d, r2 = _pair_geometry(X, idx)
    inv2 = 1.0 / r2
    inv12 = inv2**6
    coeff = -12.0 * hb.C * inv12 * inv2 + 10.0 * hb.D * inv12
    return _accumulate(len(X), idx, coeff, d).ravel()


def total_gradient(x, lj: LJParams, hb: HBParams, pl: PairList) -> np.ndarray:
    return gradient(x, lj, pl) + hb_gradient(x, hb, pl)


# ------------------------------------------------------------------ detection


def detect_hbonds(s: Structure, cutoff: float = DEFAULT_HB_CUTOFF) -> PairList:
    """Backbone N...O pairs closer than ``cutoff``.

    Pairs inside one residue or between sequence neighbours of the same chain
    are skipped.  Pairs are returned as ``(N index, O index, "hbond")`` in
    canonical order of the N atom, then the O atom.
    """
    donors, acceptors = [], []
    for k, atom in enumerate(s.atoms()):
        if atom.alt_loc not in ("", "A"):
            continue
        if atom.name == "N":
            donors.append((k, atom))
        elif atom.name == "O":
            acceptors.append((k, atom))
    if not donors or not acceptors:
        return PairList()

    N = np.array([a.position for _, a in donors])
    O = np.array([a.position for _, a in acceptors])
    dist = np.linalg.norm(N[:, None, :] - O[None, :, :], axis=2)
    pairs = []
    for a, b in zip(*np.nonzero(dist < cutoff)):
        kn, n_atom = donors[a]
        ko, o_atom = acceptors[b]
        if n_atom.chain_id == o_atom.chain_id and abs(n_atom.res_seq - o_atom.res_seq) <= 1:
            continue
        pairs.append((kn, ko, HBOND))
    return PairList(tuple(pairs))


def pairs_from_addresses(s: Structure, pairs: Iterable, kind: str = VDW) -> PairList:
    """Build a pair list from ``(address, address)`` tuples."""
    from .pdb_io import parse_address

    out = []
    for a, b in pairs:
        a, b = parse_address(a), parse_address(b)
        out.append((s.index_of(*a), s.index_of(*b), kind))
    return PairList(tuple(out))


# ------------------------------------------------------------------ parameter files

_KNOWN_KEYS = {"epsilon", "sigma", "a", "b", "c", "d", "hb_cutoff", "hb_r0", "hb_depth"}


def parse_energy_params(text: str) -> EnergyParams:
    """Read ``key = value`` lines (``#`` comments allowed).

    Keys: ``epsilon``, ``sigma`` (energy, A) or ``A``, ``B`` (energy*A^12,
    energy*A^6); ``C``, ``D`` (energy*A^12, energy*A^10) or ``hb_r0``,
    ``hb_depth``; ``hb_cutoff`` (A).  Unset values keep their defaults.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, val = parts
        key = key.strip().lower()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"line {lineno}: unknown parameter {key!r}")
        values[key] = float(val)

    if "a" in values or "b" in values:
        if {"epsilon", "sigma"} & values.keys():
            raise ValueError("give either epsilon/sigma or A/B, not both")
        lj = LJParams.from_ab(values["a"], values["b"])
    else:
        lj = LJParams(values.get("epsilon", 1.0), values.get("sigma", 1.0))

    if "hb_r0" in values or "hb_depth" in values:
        hb = HBParams.from_well(values.get("hb_depth", 1.0), values.get("hb_r0", 2.9))
    elif "c" in values or "d" in values:
        hb = HBParams(values.get("c", _DEFAULT_C), values.get("d", _DEFAULT_D))
    else:
        hb = HBParams()
    return EnergyParams(lj, hb, values.get("hb_cutoff", DEFAULT_HB_CUTOFF))


def load_energy_params(path) -> EnergyParams:
    with open(path, encoding="utf-8") as fh:
        return parse_energy_params(fh.read())
