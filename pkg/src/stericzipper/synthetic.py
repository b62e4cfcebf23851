"""Hand-built two-sheet zipper used as an offline template.

Chain A is an ideal beta strand of sequence GYMLGS built from internal
coordinates, laid along z with the residue-3 side chain pointing at the
opposite sheet (+x).  B is the antiparallel neighbour one strand up the
fibril axis (2-fold about y, then +4.7765 A in y), so residue 4 of B sits
beside residue 3 of A and faces the same way.  G and H are A and B carried
across by the sheet-pair 2-fold.  The bundled ``data/synthetic_zipper.pdb`` is the output of
:func:`build_synthetic_template`, rounded to file precision.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .geometry import SHEET_PAIR, RigidTransform, apply_structure
from .mutation import place_atom
from .pdb_io import Atom, Chain, Residue, Structure, parse_pdb

SEQUENCE = "GLY TYR MET LEU GLY SER".split()
STRAND_SPACING = 4.7765
PHI, PSI, OMEGA = -120.0, 125.0, 180.0
ROLL = 0.0  # rotation about the strand axis; 0 lines carbonyls up with the neighbour strand
# A -> B: antiparallel, shifted 0.75 A along the strand to seat six N...O bonds
NEIGHBOUR = RigidTransform(np.diag([-1.0, 1.0, -1.0]), [0.0, STRAND_SPACING, -0.75])

# (atom, parents a-b-c, bond, angle, torsion) where torsion may name a chi.
_SIDE_CHAINS = {
    "TYR": [
        ("CG", ("N", "CA", "CB"), 1.51, 113.8, "chi1"),
        ("CD1", ("CA", "CB", "CG"), 1.39, 121.0, "chi2"),
        ("CD2", ("CA", "CB", "CG"), 1.39, 120.8, "chi2+180"),
        ("CE1", ("CB", "CG", "CD1"), 1.39, 120.0, 180.0),
        ("CE2", ("CB", "CG", "CD2"), 1.39, 120.0, 180.0),
        ("CZ", ("CG", "CD1", "CE1"), 1.39, 120.0, 0.0),
        ("OH", ("CD1", "CE1", "CZ"), 1.36, 120.0, 180.0),
    ],
    "MET": [
        ("CG", ("N", "CA", "CB"), 1.52, 113.7, "chi1"),
        ("SD", ("CA", "CB", "CG"), 1.81, 112.7, "chi2"),
        ("CE", ("CB", "CG", "SD"), 1.79, 100.6, "chi3"),
    ],
    "LEU": [
        ("CG", ("N", "CA", "CB"), 1.53, 116.1, "chi1"),
        ("CD1", ("CA", "CB", "CG"), 1.52, 110.3, "chi2"),
        ("CD2", ("CA", "CB", "CG"), 1.52, 110.6, "chi2+123"),
    ],
    "SER": [("OG", ("N", "CA", "CB"), 1.42, 111.0, "chi1")],
}
_CHI = {
    "TYR": {"chi1": -65.0, "chi2": 0.0},
    "MET": {"chi1": -65.0, "chi2": 65.0, "chi3": -70.0},
    "LEU": {"chi1": 60.0, "chi2": 65.0},
    "SER": {"chi1": -65.0},
}

def _torsion(spec, chis) -> float:
    if isinstance(spec, float):
        return spec
    name, _, offset = spec.partition("+")
    return chis[name] + (float(offset) if offset else 0.0)


def _build_strand(sequence) -> list[dict[str, np.ndarray]]:
    n = np.array([-1.458 * math.cos(math.radians(68.8)), 1.458 * math.sin(math.radians(68.8)), 0.0])
    ca = np.zeros(3)
    c = np.array([1.525, 0.0, 0.0])
    residues = [{"N": n, "CA": ca, "C": c}]
    for _ in sequence[1:]:
        prev = residues[-1]
        n = place_atom(prev["N"], prev["CA"], prev["C"], 1.329, 116.2, PSI)
        ca = place_atom(prev["CA"], prev["C"], n, 1.458, 121.7, OMEGA)
        c = place_atom(prev["C"], n, ca, 1.525, 111.2, PHI)
        residues.append({"N": n, "CA": ca, "C": c})

    for k, (res, name) in enumerate(zip(residues, sequence)):
        if k + 1 < len(residues):
            res["O"] = place_atom(residues[k + 1]["N"], res["CA"], res["C"], 1.231, 120.5, 180.0)
        else:
            res["O"] = place_atom(res["N"], res["CA"], res["C"], 1.231, 120.5, PSI + 180.0)
        if name == "GLY":
            continue
        res["CB"] = place_atom(res["C"], res["N"], res["CA"], 1.53, 110.5, -122.5)
        for atom, (a, b, cc), bond, angle, tors in _SIDE_CHAINS.get(name, []):
            res[atom] = place_atom(res[a], res[b], res[cc], bond, angle, _torsion(tors, _CHI[name]))
    return residues


def _strand_frame(residues) -> RigidTransform:
    """Rotate the strand axis onto +z and the residue-3 CB towards +x (then roll)."""
    ca = np.array([r["CA"] for r in residues])
    centre = ca.mean(axis=0)
    axis = np.linalg.svd(ca - centre)[2][0]
    if axis @ (ca[-1] - ca[0]) < 0:
        axis = -axis
    cb = residues[2]["CB"] - residues[2]["CA"]
    xp = cb - (cb @ axis) * axis
    xp /= np.linalg.norm(xp)
    roll = math.radians(ROLL)
    x = math.cos(roll) * xp + math.sin(roll) * np.cross(axis, xp)
    y = np.cross(axis, x)
    M = np.array([x, y, axis])
    # centre the backbone in x/y; put the residue 3/4 midpoint at z = 0
    mid = 0.5 * (ca[2] + ca[3])
    offset = np.array([(M @ centre)[0], (M @ centre)[1], (M @ mid)[2]])
    return RigidTransform(M, -offset)


def build_synthetic_template() -> Structure:
    residues = _build_strand(SEQUENCE)
    frame = _strand_frame(residues)
    order = ["N", "CA", "C", "O", "CB", "CG", "CD1", "CD2", "CE1", "CE2", "CZ", "OH", "SD", "CE", "OG"]
    res_objs = []
    serial = 1
    for k, (res, name) in enumerate(zip(residues, SEQUENCE), start=1):
        atoms = []
        for atom_name in order:
            if atom_name not in res:
                continue
            pos = np.round(frame(res[atom_name]), 3) + 0.0
            atoms.append(
                Atom(serial, atom_name, name, "A", k, tuple(pos), occupancy=1.0, temp_factor=20.0,
                     element=atom_name[0])
            )
            serial += 1
        res_objs.append(Residue(name, k, tuple(atoms)))
    sheet1 = Structure((Chain("A", tuple(res_objs)),))
    sheet1 = sheet1.merge(apply_structure(NEIGHBOUR, sheet1, {"A": "B"}))
    sheet2 = apply_structure(SHEET_PAIR, sheet1, {"A": "G", "B": "H"})
    s = sheet1.merge(sheet2).renumbered()
    return s.with_coordinates(np.round(s.coordinates(), 3) + 0.0)


def template_path():
    return resources.files("stericzipper") / "data" / "synthetic_zipper.pdb"


def load_synthetic_template() -> Structure:
    return parse_pdb(template_path().read_text(encoding="utf-8"))
