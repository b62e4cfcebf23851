"""Alanine/glycine mutation by side-chain truncation.

Mutating to GLY keeps the backbone (N, CA, C, O); mutating to ALA also keeps
CB, building one from the backbone frame when the residue had none.  Every
other atom of the residue, hydrogens included, is dropped.  Backbone
coordinates are never touched.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .exceptions import StructureError
from .pdb_io import BACKBONE, ONE_TO_THREE, Atom, Residue, Structure

CB_BOND = 1.532
CB_ANGLE = 110.1  # N-CA-CB, degrees
CB_DIHEDRAL = -122.5  # C-N-CA-CB, degrees; L-amino acid handedness

_TARGETS = {"A": "ALA", "ALA": "ALA", "G": "GLY", "GLY": "GLY"}


def place_atom(a, b, c, bond: float, angle: float, torsion: float) -> np.ndarray:
    """Position of d such that |cd| = bond, angle(b, c, d) = angle and
    dihedral(a, b, c, d) = torsion (angles in degrees)."""
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    bc = c - b
    bc /= np.linalg.norm(bc)
    n = np.cross(b - a, bc)
    n /= np.linalg.norm(n)
    m = np.cross(n, bc)
    th, ph = math.radians(angle), math.radians(torsion)
    d_local = np.array([-bond * math.cos(th), bond * math.sin(th) * math.cos(ph), bond * math.sin(th) * math.sin(ph)])
    return c + d_local[0] * bc + d_local[1] * m + d_local[2] * n


def bond_angle(a, b, c) -> float:
    u = np.asarray(a, float) - np.asarray(b, float)
    v = np.asarray(c, float) - np.asarray(b, float)
    cos = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


def dihedral(a, b, c, d) -> float:
    a, b, c, d = (np.asarray(p, dtype=float) for p in (a, b, c, d))
    b0, b1, b2 = a - b, c - b, d - c
    b1 = b1 / np.linalg.norm(b1)
    v = b0 - (b0 @ b1) * b1
    w = b2 - (b2 @ b1) * b1
    return math.degrees(math.atan2(np.cross(b1, v) @ w, v @ w))


def build_cb(n, ca, c) -> np.ndarray:
    return place_atom(c, n, ca, CB_BOND, CB_ANGLE, CB_DIHEDRAL)


def _mutated_residue(res: Residue, target: str) -> Residue:
    backbone = {}
    for name in BACKBONE:
        atom = res.get(name)
        if atom is None:
            raise StructureError(f"{res.res_name}{res.res_seq} lacks backbone atom {name}")
        backbone[name] = dataclasses.replace(atom, res_name=target)
    atoms = [backbone[name] for name in BACKBONE]
    if target == "ALA":
        cb = res.get("CB")
        if cb is None:
            n, ca, c = (backbone[k].position for k in ("N", "CA", "C"))
            cb = Atom(
                serial=backbone["CA"].serial,
                name="CB",
                res_name=target,
                chain_id=backbone["CA"].chain_id,
                res_seq=res.res_seq,
                position=tuple(build_cb(n, ca, c)),
                occupancy=backbone["CA"].occupancy,
                temp_factor=backbone["CA"].temp_factor,
                element="C",
            )
        atoms.append(dataclasses.replace(cb, res_name=target))
    return Residue(target, res.res_seq, tuple(atoms))


def mutate_residue(s: Structure, chain: str, res_seq: int, target: str) -> Structure:
    """Return a copy of ``s`` with one residue mutated to ALA or GLY.

    A residue that already has the target identity is left as it is.
    """
    key = target.upper()
    if key not in _TARGETS:
        raise ValueError(f"unsupported mutation target {target!r}; only ALA/GLY")
    target = _TARGETS[key]
    ch = s.chain(chain)
    old = ch.residue(res_seq)
    if old.res_name == target:
        return s
    new = _mutated_residue(old, target)
    residues = tuple(new if r is old else r for r in ch.residues)
    chains = tuple(dataclasses.replace(c, residues=residues) if c is ch else c for c in s.chains)
    return Structure(chains)


def mutate_sequence(s: Structure, chain: str, sequence: str) -> Structure:
    """Mutate a whole chain position by position to ``sequence`` (letters A/G)."""
    residues = s.chain(chain).residues
    if len(sequence) != len(residues):
        raise ValueError(
            f"sequence {sequence!r} has {len(sequence)} residues, chain {chain} has {len(residues)}"
        )
    bad = set(sequence.upper()) - {"A", "G"}
    if bad:
        raise ValueError(f"sequence may only contain A and G, got {sorted(bad)}")
    for res, letter in zip(residues, sequence.upper()):
        s = mutate_residue(s, chain, res.res_seq, ONE_TO_THREE[letter])
    return s
