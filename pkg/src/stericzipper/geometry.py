"""Rigid-body transforms between fibril chains and translation refitting."""

from __future__ import annotations

import dataclasses
from typing import Mapping, Sequence

import numpy as np

from .exceptions import LabelError
from .pdb_io import Structure

ORTHO_TOL = 1e-9


class RigidTransform:
    """Proper rotation followed by a translation: ``p -> R @ p + t``."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        R = np.eye(3) if rotation is None else np.array(rotation, dtype=float).reshape(3, 3)
        t = np.zeros(3) if translation is None else np.array(translation, dtype=float).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > ORTHO_TOL:
            raise ValueError("rotation is not orthogonal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        R.flags.writeable = False
        t.flags.writeable = False
        self.rotation = R
        self.translation = t

    def __call__(self, p):
        return apply(self, p)

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"

    def inverse(self) -> RigidTransform:
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def to_row(self) -> list[float]:
        """12 numbers: rotation row-major, then translation."""
        return [*self.rotation.ravel().tolist(), *self.translation.tolist()]

    @classmethod
    def from_row(cls, row: Sequence[float]) -> RigidTransform:
        if len(row) != 12:
            raise ValueError(f"expected 12 numbers, got {len(row)}")
        return cls(np.reshape(row[:9], (3, 3)), row[9:])

    def to_text(self) -> str:
        return " ".join(f"{v:.6f}" for v in self.to_row())

    @classmethod
    def from_text(cls, text: str) -> RigidTransform:
        return cls.from_row([float(v) for v in text.split()])


IDENTITY = RigidTransform()

# 2-fold about x relating the two sheets of the zipper.
SHEET_FLIP = np.diag([1.0, -1.0, -1.0])
# Sheet 1 (A, B) -> sheet 2 (G, H) in the 3NHC template.
SHEET_PAIR = RigidTransform(SHEET_FLIP, [9.07500, 4.77650, 0.0])
# Fibril-axis repeat: two strands per 9.5530 A along y.
STACK_REPEAT = 9.5530
STACK_UP = RigidTransform(None, [0.0, STACK_REPEAT, 0.0])
STACK_DOWN = RigidTransform(None, [0.0, -STACK_REPEAT, 0.0])
# Published translation after contact optimization (rotation unchanged).
REPORTED_CONTACT_TRANSLATION = np.array([-0.703968, 7.43502, -0.33248])


def apply(t: RigidTransform, p) -> np.ndarray:
    """``R @ p + t`` for a single point or an (N, 3) array of points."""
    p = np.asarray(p, dtype=float)
    return p @ t.rotation.T + t.translation


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform that applies ``a`` first, then ``b``."""
    return RigidTransform(b.rotation @ a.rotation, b.rotation @ a.translation + b.translation)


def apply_structure(t: RigidTransform, s: Structure, relabel: Mapping[str, str] | None = None) -> Structure:
    """Move the chains named in ``relabel`` by ``t`` and rename them.

    With ``relabel=None`` every chain is moved and keeps its id.  Chains not
    named in ``relabel`` are left untouched; a new id that collides with one
    of them (or with another new id) raises :class:`LabelError`.
    """
    if relabel is None:
        relabel = {cid: cid for cid in s.chain_ids}
    missing = set(relabel) - set(s.chain_ids)
    if missing:
        raise LabelError(f"relabel names chains not in structure: {sorted(missing)}")
    targets = list(relabel.values())
    if len(set(targets)) != len(targets):
        raise LabelError(f"relabel maps two chains onto one id: {relabel}")
    untouched = {cid for cid in s.chain_ids if cid not in relabel}
    clash = untouched & set(targets)
    if clash:
        raise LabelError(f"relabel target(s) {sorted(clash)} collide with untouched chains")

    chains = []
    for chain in s.chains:
        if chain.id not in relabel:
            chains.append(chain)
            continue
        new_id = relabel[chain.id]
        residues = []
        for res in chain.residues:
            pos = apply(t, [a.position for a in res.atoms]) if res.atoms else []
            atoms = tuple(
                dataclasses.replace(a, chain_id=new_id, position=tuple(p))
                for a, p in zip(res.atoms, np.asarray(pos).tolist())
            )
            residues.append(dataclasses.replace(res, atoms=atoms))
        chains.append(dataclasses.replace(chain, id=new_id, residues=tuple(residues)))
    return Structure(tuple(chains))


def fit_translation(rotation, pairs) -> RigidTransform:
    """Least-squares translation for a fixed rotation.

    Args:
        rotation: 3x3 orthogonal matrix, held fixed.
        pairs: iterable of ``(source, target)`` points.

    Returns:
        Transform whose translation is the mean of ``target - R @ source``,
        which minimizes the summed squared residual for that rotation.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("fit_translation needs at least one (source, target) pair")
    R = np.asarray(rotation, dtype=float)
    src = np.array([p[0] for p in pairs], dtype=float).reshape(-1, 3)
    dst = np.array([p[1] for p in pairs], dtype=float).reshape(-1, 3)
    return RigidTransform(R, (dst - src @ R.T).mean(axis=0))


def residual_sum_squares(t: RigidTransform, pairs) -> float:
    src = np.array([p[0] for p in pairs], dtype=float).reshape(-1, 3)
    dst = np.array([p[1] for p in pairs], dtype=float).reshape(-1, 3)
    return float(((apply(t, src) - dst) ** 2).sum())
