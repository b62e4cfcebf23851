"""Fixed-column PDB coordinate records and the in-memory structure model.

Only ``ATOM``, ``TER`` and ``END`` records are interpreted.  Everything else
(headers, ``HETATM``, ``CONECT``, ...) is skipped.  Parsing stops at the first
``END`` or ``ENDMDL`` so multi-model files yield their first model.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

from .exceptions import (
    AmbiguousAtomError,
    AtomNotFoundError,
    LabelError,
    PDBFormatError,
    PDBParseError,
    StructureError,
)

logger = logging.getLogger(__name__)

BACKBONE = ("N", "CA", "C", "O")


@dataclass(frozen=True)
class Atom:
    serial: int
    name: str
    res_name: str
    chain_id: str
    res_seq: int
    position: tuple[float, float, float]
    alt_loc: str = ""
    occupancy: float = 1.0
    temp_factor: float = 0.0
    element: str = ""

    def __post_init__(self):
        name = self.name.strip()
        if not name:
            raise StructureError("atom name must be non-empty")
        object.__setattr__(self, "name", name)
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise StructureError(f"atom {name}: position must be 3 finite reals, got {self.position!r}")
        object.__setattr__(self, "position", pos)
        if not self.element:
            object.__setattr__(self, "element", _guess_element(name))

    @property
    def is_hydrogen(self) -> bool:
        return self.element.upper() in ("H", "D")

    def moved(self, position) -> Atom:
        return dataclasses.replace(self, position=tuple(position))


@dataclass(frozen=True)
class Residue:
    res_name: str
    res_seq: int
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def atom_names(self) -> list[str]:
        return [a.name for a in self.atoms]

    def get(self, name: str) -> Atom | None:
        for a in self.atoms:
            if a.name == name and a.alt_loc in ("", "A"):
                return a
        return None


@dataclass(frozen=True)
class Chain:
    id: str
    residues: tuple[Residue, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "residues", tuple(self.residues))

    def residue(self, res_seq: int) -> Residue:
        for r in self.residues:
            if r.res_seq == res_seq:
                return r
        raise AtomNotFoundError(f"chain {self.id} has no residue {res_seq}")

    def atoms(self) -> Iterator[Atom]:
        for r in self.residues:
            yield from r.atoms

    @property
    def sequence(self) -> str:
        return "".join(THREE_TO_ONE.get(r.res_name, "X") for r in self.residues)


@dataclass(frozen=True)
class Structure:
    """Ordered chains of residues of atoms.

    Instances are immutable; every transforming operation returns a new
    structure.  The canonical atom ordering (used by pair lists and flat
    coordinate vectors) is chain order, then residue order, then atom order.
    """

    chains: tuple[Chain, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        seen = set()
        for chain in self.chains:
            if chain.id in seen:
                raise StructureError(f"duplicate chain id {chain.id!r}")
            seen.add(chain.id)
            for res in chain.residues:
                for atom in res.atoms:
                    if (atom.chain_id, atom.res_seq, atom.res_name) != (chain.id, res.res_seq, res.res_name):
                        raise StructureError(
                            f"atom {atom.name} labelled {atom.chain_id}/{atom.res_name}{atom.res_seq} "
                            f"sits in {chain.id}/{res.res_name}{res.res_seq}"
                        )

    @property
    def chain_ids(self) -> list[str]:
        return [c.id for c in self.chains]

    def chain(self, chain_id: str) -> Chain:
        for c in self.chains:
            if c.id == chain_id:
                return c
        raise AtomNotFoundError(f"no chain {chain_id!r}")

    def atoms(self) -> list[Atom]:
        return [a for c in self.chains for a in c.atoms()]

    @property
    def n_atoms(self) -> int:
        return sum(len(r.atoms) for c in self.chains for r in c.residues)

    def coordinates(self) -> np.ndarray:
        """(N, 3) array of positions in canonical order."""
        atoms = self.atoms()
        if not atoms:
            return np.zeros((0, 3))
        return np.array([a.position for a in atoms], dtype=float)

    def with_coordinates(self, coords) -> Structure:
        coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        if len(coords) != self.n_atoms:
            raise StructureError(f"expected {self.n_atoms} positions, got {len(coords)}")
        it = iter(coords.tolist())
        chains = []
        for c in self.chains:
            residues = [
                dataclasses.replace(r, atoms=tuple(a.moved(next(it)) for a in r.atoms))
                for r in c.residues
            ]
            chains.append(dataclasses.replace(c, residues=tuple(residues)))
        return Structure(tuple(chains))

    def select(self, chain_ids: Iterable[str]) -> Structure:
        """Sub-structure with the given chains, in the order requested."""
        return Structure(tuple(self.chain(cid) for cid in chain_ids))

    def merge(self, other: Structure) -> Structure:
        clash = set(self.chain_ids) & set(other.chain_ids)
        if clash:
            raise LabelError(f"chain ids already present: {sorted(clash)}")
        return Structure(self.chains + other.chains)

    def sorted_chains(self) -> Structure:
        return Structure(tuple(sorted(self.chains, key=lambda c: c.id)))

    def renumbered(self) -> Structure:
        """Copy with atom serials 1..N, leaving one serial gap per TER record."""
        serial = 1
        chains = []
        for c in self.chains:
            residues = []
            for r in c.residues:
                atoms = []
                for a in r.atoms:
                    atoms.append(dataclasses.replace(a, serial=serial))
                    serial += 1
                residues.append(dataclasses.replace(r, atoms=tuple(atoms)))
            chains.append(dataclasses.replace(c, residues=tuple(residues)))
            serial += 1
        return Structure(tuple(chains))

    def index_of(self, chain: str, res_seq: int, name: str) -> int:
        """Canonical index of the atom addressed by ``chain.res_seq.name``."""
        matches = [
            (i, a)
            for i, a in enumerate(self.atoms())
            if a.chain_id == chain and a.res_seq == res_seq and a.name == name
        ]
        if not matches:
            raise AtomNotFoundError(f"no atom {chain}.{res_seq}.{name}")
        if len(matches) > 1:
            preferred = [m for m in matches if m[1].alt_loc in ("", "A")]
            if len(preferred) != 1:
                raise AmbiguousAtomError(f"{len(matches)} atoms match {chain}.{res_seq}.{name}")
            return preferred[0][0]
        return matches[0][0]


def find_atom(s: Structure, chain: str, res_seq: int, name: str) -> Atom:
    """Return the unique atom at ``chain.res_seq.name``.

    When alternate locations share the address, the copy with alt_loc ``A``
    (or blank) wins; anything else still ambiguous raises.
    """
    return s.atoms()[s.index_of(chain, res_seq, name)]


class AtomAddress(NamedTuple):
    chain: str
    res_seq: int
    name: str

    def __str__(self):
        return f"{self.chain}.{self.res_seq}.{self.name}"


_ADDRESS_RE = re.compile(r"^\s*(\w)[.:]([A-Za-z]{3})?(-?\d+)[.:]([A-Za-z0-9']+)\s*$")


def parse_address(text) -> AtomAddress:
    """Parse ``A.ALA3.CB``, ``A.3.CB`` or ``A:3:CB`` into an address.

    Tuples/lists of (chain, res_seq, name) pass through.
    """
    if isinstance(text, AtomAddress):
        return text
    if isinstance(text, (tuple, list)):
        chain, res_seq, name = text
        return AtomAddress(str(chain), int(res_seq), str(name))
    m = _ADDRESS_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse atom address {text!r}")
    return AtomAddress(m.group(1), int(m.group(3)), m.group(4))


# --------------------------------------------------------------------- reading


def _guess_element(name: str) -> str:
    for ch in name:
        if ch.isalpha():
            return ch.upper()
    return ""


def _field(line: str, start: int, stop: int, kind, what: str, lineno: int, default=None):
    raw = line[start:stop]
    if not raw.strip():
        if default is not None:
            return default
        raise PDBParseError(f"missing {what} (columns {start + 1}-{stop})", lineno)
    try:
        return kind(raw)
    except ValueError:
        raise PDBParseError(f"malformed {what} {raw!r} (columns {start + 1}-{stop})", lineno) from None


def _parse_atom_line(line: str, lineno: int) -> Atom:
    line = line.ljust(80)
    try:
        return Atom(
            serial=_field(line, 6, 11, int, "serial", lineno),
            name=line[12:16],
            alt_loc=line[16].strip(),
            res_name=line[17:20].strip(),
            chain_id=line[21],
            res_seq=_field(line, 22, 26, int, "residue number", lineno),
            position=(
                _field(line, 30, 38, float, "x coordinate", lineno),
                _field(line, 38, 46, float, "y coordinate", lineno),
                _field(line, 46, 54, float, "z coordinate", lineno),
            ),
            occupancy=_field(line, 54, 60, float, "occupancy", lineno, default=1.0),
            temp_factor=_field(line, 60, 66, float, "temperature factor", lineno, default=0.0),
            element=line[76:78].strip(),
        )
    except StructureError as exc:
        raise PDBParseError(str(exc), lineno) from None


def parse_pdb(text: str | TextIO | Iterable[str]) -> Structure:
    """Parse PDB text into a :class:`Structure`.

    ``TER`` closes the current chain; an ATOM whose chain id differs from the
    open chain also starts a new one.  Reopening a closed chain id is a
    :class:`StructureError`.  Alternate locations other than blank/``A`` are
    dropped (a warning reports how many).
    """
    if isinstance(text, str):
        lines: Iterable[str] = io.StringIO(text)
    elif hasattr(text, "read"):
        lines = io.StringIO(text.read())
    else:
        lines = text

    chains: list[Chain] = []
    closed: set[str] = set()
    cur_id: str | None = None
    residues: list[Residue] = []
    res_atoms: list[Atom] = []
    dropped = 0

    def flush_residue():
        nonlocal res_atoms
        if res_atoms:
            first = res_atoms[0]
            residues.append(Residue(first.res_name, first.res_seq, tuple(res_atoms)))
            res_atoms = []

    def close_chain():
        nonlocal cur_id, residues
        flush_residue()
        if cur_id is not None:
            chains.append(Chain(cur_id, tuple(residues)))
            closed.add(cur_id)
        cur_id = None
        residues = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        record = line[:6].rstrip()
        if record in ("END", "ENDMDL"):
            break
        if record == "TER":
            close_chain()
            continue
        if record != "ATOM":
            continue
        atom = _parse_atom_line(line, lineno)
        if atom.alt_loc not in ("", "A"):
            dropped += 1
            continue
        if atom.chain_id != cur_id:
            close_chain()
            if atom.chain_id in closed:
                raise StructureError(f"line {lineno}: chain {atom.chain_id!r} reappears after it was closed")
            cur_id = atom.chain_id
        if res_atoms and (res_atoms[0].res_seq, res_atoms[0].res_name) != (atom.res_seq, atom.res_name):
            flush_residue()
        res_atoms.append(atom)
    close_chain()

    if dropped:
        logger.warning("dropped %d atoms with alternate location other than 'A'", dropped)
    return Structure(tuple(chains))


def read_pdb(path) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return parse_pdb(fh)


# --------------------------------------------------------------------- writing


def _coord(value: float, what: str) -> str:
    text = f"{round(value, 3) + 0.0:8.3f}"
    if len(text) != 8:
        raise PDBFormatError(f"{what} = {value} does not fit the 8.3 coordinate columns")
    return text


def _atom_name_field(atom: Atom) -> str:
    if len(atom.name) >= 4 or len(atom.element) == 2:
        return atom.name.ljust(4)[:4]
    return (" " + atom.name).ljust(4)


def format_atom(atom: Atom, serial: int | None = None) -> str:
    serial = atom.serial if serial is None else serial
    x, y, z = atom.position
    return (
        f"ATOM  {serial:>5d} {_atom_name_field(atom)}{atom.alt_loc or ' ':1}"
        f"{atom.res_name:>3} {atom.chain_id:1}{atom.res_seq:>4d}    "
        f"{_coord(x, 'x')}{_coord(y, 'y')}{_coord(z, 'z')}"
        f"{atom.occupancy:6.2f}{atom.temp_factor:6.2f}          {atom.element:>2}"
    )


def write_pdb(s: Structure, renumber: bool = False) -> str:
    """Serialize to PDB text (LF line endings, TER per chain, END last).

    Stored serials are written as-is and must be strictly increasing; pass
    ``renumber=True`` for structures assembled from copied chains.
    """
    if renumber:
        s = s.renumbered()
    out = []
    last_serial = 0
    for chain in s.chains:
        last = None
        for atom in chain.atoms():
            if atom.serial <= last_serial:
                raise StructureError(
                    f"atom serials must increase: {atom.serial} follows {last_serial} "
                    "(write with renumber=True)"
                )
            last_serial = atom.serial
            out.append(format_atom(atom))
            last = atom
        if last is not None:
            out.append(f"TER   {last.serial + 1:>5d}      {last.res_name:>3} {chain.id:1}{last.res_seq:>4d}")
    out.append("END")
    return "\n".join(out) + "\n"


THREE_TO_ONE = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C", "GLN": "Q", "GLU": "E",
    "GLY": "G", "HIS": "H", "ILE": "I", "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F",
    "PRO": "P", "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
}
ONE_TO_THREE = {v: k for k, v in THREE_TO_ONE.items()}
