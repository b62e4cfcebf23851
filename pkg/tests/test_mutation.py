import numpy as np
import pytest

from stericzipper.exceptions import StructureError
from stericzipper.mutation import (
    CB_ANGLE,
    CB_BOND,
    bond_angle,
    build_cb,
    dihedral,
    mutate_residue,
    mutate_sequence,
    place_atom,
)
from stericzipper.pdb_io import BACKBONE, Atom, Chain, Residue, Structure, find_atom


def backbone(s, chain):
    return {(a.res_seq, a.name): a.position for a in s.chain(chain).atoms() if a.name in BACKBONE}


def test_place_atom_internal_coordinates():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b, c = rng.normal(size=(3, 3)) * 2
        bond, angle, tors = rng.uniform(1.0, 2.0), rng.uniform(60, 170), rng.uniform(-180, 180)
        d = place_atom(a, b, c, bond, angle, tors)
        assert np.linalg.norm(d - c) == pytest.approx(bond, rel=1e-10)
        assert bond_angle(b, c, d) == pytest.approx(angle, abs=1e-8)
        assert dihedral(a, b, c, d) == pytest.approx(tors, abs=1e-8)


def test_tyr_to_ala(template):
    s = mutate_residue(template, "A", 2, "ALA")
    res = s.chain("A").residue(2)
    assert res.res_name == "ALA"
    assert sorted(res.atom_names()) == sorted(["N", "CA", "C", "O", "CB"])
    old = template.chain("A").residue(2)
    for name in ("N", "CA", "C", "O", "CB"):
        assert res.get(name).position == old.get(name).position


def test_ser_to_gly(template):
    s = mutate_residue(template, "A", 6, "G")
    res = s.chain("A").residue(6)
    assert res.res_name == "GLY"
    assert res.atom_names() == ["N", "CA", "C", "O"]


def test_gly_to_ala_builds_cb(template):
    s = mutate_residue(template, "A", 1, "ALA")
    res = s.chain("A").residue(1)
    n, ca, c, cb = (np.array(res.get(k).position) for k in ("N", "CA", "C", "CB"))
    assert np.linalg.norm(cb - ca) == pytest.approx(CB_BOND, abs=1e-9)
    assert bond_angle(n, ca, cb) == pytest.approx(CB_ANGLE, abs=0.5)
    assert res.get("CB").element == "C"


def test_built_cb_matches_existing_cb(template):
    """The construction reproduces real L-residue CBs, i.e. has the right handedness."""
    for chain in "ABGH":
        for res in template.chain(chain).residues:
            if res.get("CB") is None:
                continue
            built = build_cb(*(res.get(k).position for k in ("N", "CA", "C")))
            assert np.linalg.norm(built - res.get("CB").position) < 0.05


def test_built_cb_chirality():
    # Ideal backbone: the CB of an L residue has a negative C-N-CA-CB dihedral.
    n, ca, c = np.array([1.458, 0, 0]), np.zeros(3), np.array([-0.551, 1.420, 0])
    cb = build_cb(n, ca, c)
    assert -130 < dihedral(c, n, ca, cb) < -115


def test_errors(template):
    with pytest.raises(ValueError):
        mutate_residue(template, "A", 2, "TRP")
    atoms = (Atom(1, "N", "TYR", "A", 1, (0, 0, 0)), Atom(2, "CA", "TYR", "A", 1, (1.5, 0, 0)))
    broken = Structure((Chain("A", (Residue("TYR", 1, atoms),)),))
    with pytest.raises(StructureError):
        mutate_residue(broken, "A", 1, "ALA")


def test_drops_hydrogens():
    atoms = tuple(
        Atom(i + 1, name, "SER", "A", 1, pos)
        for i, (name, pos) in enumerate(
            [("N", (0, 0, 0)), ("CA", (1.46, 0, 0)), ("C", (2.0, 1.4, 0)), ("O", (3.2, 1.6, 0)),
             ("CB", (2.0, -0.8, 1.2)), ("OG", (3.4, -0.8, 1.2)), ("H", (-0.9, 0.3, 0)), ("HA", (1.8, -0.5, -0.9))]
        )
    )
    s = Structure((Chain("A", (Residue("SER", 1, atoms),)),))
    out = mutate_residue(s, "A", 1, "ALA").chain("A").residue(1)
    assert out.atom_names() == ["N", "CA", "C", "O", "CB"]


@pytest.mark.parametrize(
    "seq, names",
    [
        ("AAAAGA", ["ALA", "ALA", "ALA", "ALA", "GLY", "ALA"]),
        ("GAAAAG", ["GLY", "ALA", "ALA", "ALA", "ALA", "GLY"]),
        ("agaaaa", ["ALA", "GLY", "ALA", "ALA", "ALA", "ALA"]),
    ],
)
def test_mutate_sequence(template, seq, names):
    s = mutate_sequence(template, "A", seq)
    assert [r.res_name for r in s.chain("A").residues] == names
    assert backbone(s, "A") == backbone(template, "A")
    counts = [len(r.atoms) for r in s.chain("A").residues]
    assert counts == [4 if n == "GLY" else 5 for n in names]
    assert s.chain("B") == template.chain("B")


def test_mutate_sequence_errors(template):
    with pytest.raises(ValueError, match="6"):
        mutate_sequence(template, "A", "AAAA")
    with pytest.raises(ValueError):
        mutate_sequence(template, "A", "AAAVGA")


def test_idempotent(template):
    once = mutate_sequence(template, "G", "AAAAGA")
    assert mutate_sequence(once, "G", "AAAAGA") == once
    assert mutate_residue(once, "G", 5, "GLY") is once


def test_cb_address_after_mutation(template):
    s = mutate_sequence(template, "G", "AAAAGA")
    assert find_atom(s, "G", 4, "CB").position == find_atom(template, "G", 4, "CB").position
