import numpy as np
import pytest

from stericzipper.pdb_io import Atom, Chain, Residue, Structure
from stericzipper.synthetic import load_synthetic_template

ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "network: needs access to the public structure archive")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def template() -> Structure:
    return load_synthetic_template()


def make_structure(spec) -> Structure:
    """Build a structure from ``{chain: [(res_name, res_seq, [(name, xyz), ...]), ...]}``."""
    serial = 1
    chains = []
    for cid, residues in spec.items():
        res_objs = []
        for res_name, res_seq, atoms in residues:
            built = []
            for name, xyz in atoms:
                built.append(Atom(serial, name, res_name, cid, res_seq, tuple(xyz)))
                serial += 1
            res_objs.append(Residue(res_name, res_seq, tuple(built)))
        chains.append(Chain(cid, tuple(res_objs)))
    return Structure(tuple(chains))


def point_structure(points, chain="A") -> Structure:
    """One CA atom per residue at the given points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return make_structure({chain: [("ALA", k + 1, [("CA", p)]) for k, p in enumerate(pts)]})


def paired_strands(n_res: int = 4, rise: float = 3.4, gap: float = 4.8, hb: float = 2.9) -> Structure:
    """Two parallel strands along z whose CA lines are ``gap`` apart in y.

    A carries N and O on its +y face and B on its -y face, placed so that
    A.N(k) faces B.O(k) and A.O(k) faces B.N(k), each ``hb`` apart.  Every
    other N...O distance is at least 4.4 A or involves sequence neighbours.
    """
    offset = (gap - hb) / 2.0
    y_a, y_b = offset, offset + hb
    spec = {"A": [], "B": []}
    for k in range(n_res):
        z = rise * k
        spec["A"].append(
            ("ALA", k + 1, [("N", (1.0, y_a, z)), ("CA", (0.0, 0.0, z + 0.85)), ("O", (-1.0, y_a, z + 1.7))])
        )
        spec["B"].append(
            ("ALA", k + 1, [("N", (-1.0, y_b, z + 1.7)), ("CA", (0.0, gap, z + 0.85)), ("O", (1.0, y_b, z))])
        )
    return make_structure(spec)
