"""End-to-end zipper model building.

For each model sequence: mutate the template's A, B, G, H chains, pull the
designated inter-sheet contacts together with the annealer, move the sheet-2
chains rigidly onto the optimized contact positions, stack the four chains
into the 12-chain lattice, relax, and write a PDB file plus a JSON report.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import (
    DEFAULT_HB_CUTOFF,
    EnergyBreakdown,
    HBParams,
    LJParams,
    PairList,
    detect_hbonds,
    energy_breakdown,
    pairs_from_addresses,
    total_energy,
    total_gradient,
)
from .exceptions import LabelError, StericZipperError, StructureError
from .fetch import FetchConfig, fetch_entry
from .geometry import (
    REPORTED_CONTACT_TRANSLATION,
    SHEET_FLIP,
    SHEET_PAIR,
    STACK_DOWN,
    STACK_UP,
    RigidTransform,
    apply_structure,
    compose,
    fit_translation,
)
from .mutation import mutate_sequence
from .optimizer import (
    AnnealConfig,
    Objective,
    OptimizationResult,
    anneal,
    discrete_gradient_descent,
    make_contact_objective,
)
from .pdb_io import Structure, parse_address, parse_pdb, read_pdb, write_pdb
from .synthetic import load_synthetic_template

logger = logging.getLogger(__name__)

SEQUENCE_PRESETS = {
    # the three distinct 6-residue windows of AGAAAAGA
    "windows": ["AAAAGA", "GAAAAG", "AGAAAA"],
    # models 1-3 as originally named; model 3 repeats model 1
    "literal": ["AAAAGA", "GAAAAG", "AAAAGA"],
}
CORE_CHAINS = ("A", "B", "G", "H")
STACKING_NOTE = "C-F and I-L generated by +/-9.5530 A y-stacking after contact optimization"


@dataclass
class ContactSpec:
    fixed: list[str] = field(default_factory=lambda: ["A.3.CB", "B.4.CB"])
    free: list[str] = field(default_factory=lambda: ["G.4.CB", "H.3.CB"])
    pairs: list[tuple[str, str]] = field(default_factory=lambda: [("A.3.CB", "G.4.CB"), ("B.4.CB", "H.3.CB")])

    def __post_init__(self):
        self.pairs = [tuple(p) for p in self.pairs]
        for addr in [*self.fixed, *self.free, *(a for p in self.pairs for a in p)]:
            parse_address(addr)


@dataclass
class RefineConfig:
    max_steps: int = 500
    max_displacement: float = 1.0  # A, per atom, relative to the refinement start


@dataclass
class PipelineConfig:
    template: str = "synthetic"
    sequences: list[str] = field(default_factory=lambda: list(SEQUENCE_PRESETS["windows"]))
    contact: ContactSpec = field(default_factory=ContactSpec)
    lj: LJParams = field(default_factory=LJParams)
    hb: HBParams = field(default_factory=HBParams)
    hb_cutoff: float = DEFAULT_HB_CUTOFF
    # one atom per move: a contact that has settled must not freeze the other
    anneal: AnnealConfig = field(default_factory=lambda: AnnealConfig(block_size=3))
    refine: RefineConfig = field(default_factory=RefineConfig)
    contact_attempts: int = 6
    output_dir: str = "models"
    seed: int = 0
    cache_dir: str | None = None
    base_url: str | None = None

    def __post_init__(self):
        if self.contact_attempts < 1:
            raise ValueError("contact_attempts must be at least 1")
        if not self.hb_cutoff > 0:
            raise ValueError("hb_cutoff must be positive")
        if self.refine.max_steps < 0 or not self.refine.max_displacement > 0:
            raise ValueError("refine needs max_steps >= 0 and a positive max_displacement")

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown pipeline settings: {sorted(unknown)}")
        seqs = data.get("sequences")
        if isinstance(seqs, str):
            if seqs not in SEQUENCE_PRESETS:
                raise ValueError(f"unknown sequence preset {seqs!r}; choose from {sorted(SEQUENCE_PRESETS)}")
            data["sequences"] = list(SEQUENCE_PRESETS[seqs])
        if "contact" in data:
            data["contact"] = ContactSpec(**data["contact"])
        if "lj" in data:
            data["lj"] = LJParams(**data["lj"])
        if "hb" in data:
            hb = data["hb"]
            data["hb"] = HBParams.from_well(hb["depth"], hb["r0"]) if "r0" in hb else HBParams(**hb)
        if "anneal" in data:
            data["anneal"] = AnnealConfig.from_dict(data["anneal"])
        if "refine" in data:
            data["refine"] = RefineConfig(**data["refine"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> PipelineConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["contact"]["pairs"] = [list(p) for p in self.contact.pairs]
        return out


@dataclass
class ContactOutcome:
    structure: Structure
    transform: RigidTransform  # joint least-squares sheet-1 -> sheet-2 transform
    result: OptimizationResult
    chain_transforms: dict[str, RigidTransform]
    refit_pairs: list[tuple[str, list[float], list[float]]]
    attempts: int = 1
    converged: bool = False  # reached the -epsilon-per-pair lower bound


@dataclass
class ModelReport:
    model: str
    sequence: str
    template: str
    seed: int
    contact_pairs: list[list[str]]
    distances_initial: list[float]
    distances_optimized: list[float]
    distances_final: list[float]
    fitted_transform: list[float]
    chain_transforms: dict[str, list[float]]
    refit_atoms: list[str]
    reference_translation: list[float]
    translation_deviation: list[float]
    optimizer_best_value: float
    optimizer_iterations: int
    optimizer_attempts: int
    optimizer_converged: bool
    energy_before_refine: dict[str, float]
    energy_after_refine: dict[str, float]
    refine_steps: int
    max_refine_displacement: float
    hbond_criterion: str
    hbond_pair_count: int
    hbond_pairs: list[list[str]]
    stacking: str
    config: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2) + "\n"


@dataclass
class PipelineResult:
    reports: list[ModelReport]
    failures: dict[str, str]
    files: list[Path]

    @property
    def ok(self) -> bool:
        return not self.failures


# ------------------------------------------------------------------ stages


def load_template(cfg: PipelineConfig) -> Structure:
    ref = cfg.template
    if ref == "synthetic":
        return load_synthetic_template()
    if Path(ref).exists():
        return read_pdb(ref)
    fetch_cfg = FetchConfig()
    if cfg.cache_dir:
        fetch_cfg.cache_dir = Path(cfg.cache_dir)
    if cfg.base_url:
        fetch_cfg.base_url = cfg.base_url.rstrip("/")
    return parse_pdb(fetch_entry(fetch_cfg, ref))


def build_core(template: Structure, sequence: str, cfg: PipelineConfig | None = None) -> Structure:
    """Chains A, B, G, H of the template, all mutated to ``sequence``.

    Missing G/H are generated from A/B with the sheet-pair transform; chains
    already present are used as they are.
    """
    ids = set(template.chain_ids)
    if not {"A", "B"} <= ids:
        raise StructureError(f"template needs chains A and B, has {template.chain_ids}")
    sheet2 = {"G", "H"} & ids
    if sheet2 == {"G", "H"}:
        core = template.select(CORE_CHAINS)
    elif not sheet2:
        ab = template.select(("A", "B"))
        core = ab.merge(apply_structure(SHEET_PAIR, ab, {"A": "G", "B": "H"}))
    else:
        raise StructureError(f"template has only one sheet-2 chain ({sorted(sheet2)})")
    for chain in CORE_CHAINS:
        core = mutate_sequence(core, chain, sequence)
    return core


def designated_pairs(s: Structure, contact: ContactSpec) -> PairList:
    return pairs_from_addresses(s, contact.pairs)


def pair_distances(s: Structure, pl: PairList) -> list[float]:
    X = s.coordinates()
    return [float(np.linalg.norm(X[i] - X[j])) for i, j, _ in pl]


def optimize_contact(core: Structure, cfg: PipelineConfig, seed: int | None = None) -> ContactOutcome:
    """Anneal the free contact atoms, then move their chains rigidly.

    Each chain that owns a free atom is translated (the sheet-pair rotation is
    held fixed) so that its free atoms land, in the least-squares sense, on
    their optimized positions.  The returned ``transform`` is the joint fit
    over all free atoms, i.e. one sheet-1 -> sheet-2 transform.
    """
    contact = cfg.contact
    pl = designated_pairs(core, contact)
    obj = make_contact_objective(core, contact.fixed, contact.free, pl, cfg.lj)
    base_seed = cfg.anneal.seed if seed is None else seed
    # every designated pair is bounded below by -epsilon, so a run that
    # reaches the bound cannot be improved on and later attempts are skipped
    bound = -cfg.lj.epsilon * len(pl)
    result = None
    converged = False
    for attempt in range(1, cfg.contact_attempts + 1):
        run = anneal(obj, obj.start, dataclasses.replace(cfg.anneal, seed=base_seed + attempt - 1))
        if result is None or run.best_value < result.best_value:
            result = run
        converged = result.best_value - bound <= cfg.anneal.target_tolerance
        if converged:
            break
    if not converged:
        logger.warning("contact optimization stopped at %.6g, above the bound %.6g", result.best_value, bound)

    atoms = core.atoms()
    fixed_chains = {atoms[i].chain_id for i in obj.fixed_indices}
    to_frame1 = SHEET_PAIR.inverse()
    before = obj.start.reshape(-1, 3)
    after = np.asarray(result.best_point).reshape(-1, 3)
    by_chain: dict[str, list] = {}
    refit = []
    for k, idx in enumerate(obj.free_indices):
        atom = atoms[idx]
        if atom.chain_id in fixed_chains:
            raise ValueError(f"free atom {atom.chain_id}.{atom.res_seq}.{atom.name} shares a chain with a fixed atom")
        source = to_frame1(before[k])
        by_chain.setdefault(atom.chain_id, []).append((source, after[k]))
        refit.append((f"{atom.chain_id}.{atom.res_seq}.{atom.name}", source.tolist(), after[k].tolist()))

    moved = core
    chain_transforms = {}
    for chain_id, pairs in by_chain.items():
        t_chain = fit_translation(SHEET_FLIP, pairs)
        chain_transforms[chain_id] = t_chain
        moved = apply_structure(compose(to_frame1, t_chain), moved, {chain_id: chain_id})

    all_pairs = [p for pairs in by_chain.values() for p in pairs]
    joint = fit_translation(SHEET_FLIP, all_pairs) if all_pairs else SHEET_PAIR
    return ContactOutcome(moved, joint, result, chain_transforms, refit, attempt, converged)


def generate_full(core: Structure) -> Structure:
    """Stack A, B, G, H into the 12-chain A-L lattice (chains sorted by id)."""
    if sorted(core.chain_ids) != sorted(CORE_CHAINS):
        raise LabelError(f"core must hold exactly chains A, B, G, H; got {core.chain_ids}")
    ab = core.select(("A", "B"))
    gh = core.select(("G", "H"))
    full = core
    full = full.merge(apply_structure(STACK_UP, ab, {"A": "C", "B": "D"}))
    full = full.merge(apply_structure(STACK_DOWN, ab, {"A": "E", "B": "F"}))
    full = full.merge(apply_structure(STACK_UP, gh, {"G": "I", "H": "J"}))
    full = full.merge(apply_structure(STACK_DOWN, gh, {"G": "K", "H": "L"}))
    return full.sorted_chains()


def refinement_pairs(s: Structure, cfg: PipelineConfig) -> PairList:
    return designated_pairs(s, cfg.contact) + detect_hbonds(s, cfg.hb_cutoff)


def refine(s: Structure, cfg: PipelineConfig, pl: PairList | None = None) -> tuple[Structure, list[float]]:
    """Capped steepest-descent relaxation of designated vdW + H-bond pairs.

    No atom moves further than ``cfg.refine.max_displacement`` from where it
    started.  Returns the relaxed structure and the (non-increasing) energy
    after every accepted step.
    """
    if pl is None:
        pl = refinement_pairs(s, cfg)
    x0 = s.coordinates().ravel()
    energy_breakdown(x0, cfg.lj, cfg.hb, pl)  # raises SingularityError naming the pair
    cap = cfg.refine.max_displacement
    start = x0.reshape(-1, 3)

    def project(x):
        X = x.reshape(-1, 3)
        delta = X - start
        norm = np.linalg.norm(delta, axis=1)
        over = norm > cap
        if np.any(over):
            delta[over] *= (cap / norm[over])[:, None]
        return (start + delta).ravel()

    obj = Objective(
        dimension=x0.size,
        evaluate=lambda x: energy_breakdown(x, cfg.lj, cfg.hb, pl).total,
        gradient=lambda x: total_gradient(x, cfg.lj, cfg.hb, pl),
    )
    res = discrete_gradient_descent(obj, x0, max_steps=cfg.refine.max_steps, project=project)
    return s.with_coordinates(res.best_point), res.values


def model_seed(root: int, model_number: int) -> int:
    return int(np.random.SeedSequence([root, model_number]).generate_state(1)[0])


def _energy_dict(e: EnergyBreakdown) -> dict[str, float]:
    return {"vdw": e.vdw, "hbond": e.hbond, "total": e.total}


def _address(s: Structure, idx: int) -> str:
    a = s.atoms()[idx]
    return f"{a.chain_id}.{a.res_seq}.{a.name}"


def build_model(template: Structure, sequence: str, cfg: PipelineConfig, number: int) -> tuple[Structure, ModelReport]:
    seed = model_seed(cfg.seed, number)
    core = build_core(template, sequence, cfg)
    pl_core = designated_pairs(core, cfg.contact)
    d_initial = pair_distances(core, pl_core)

    outcome = optimize_contact(core, cfg, seed=seed)
    d_opt = pair_distances(outcome.structure, pl_core)

    full = generate_full(outcome.structure)
    pl = refinement_pairs(full, cfg)
    e_before = total_energy(full, cfg.lj, cfg.hb, pl)
    refined, trace = refine(full, cfg, pl)
    # report against what is actually written, i.e. at file precision
    final = parse_pdb(write_pdb(refined, renumber=True))
    e_after = total_energy(final, cfg.lj, cfg.hb, pl)
    shift = np.linalg.norm(refined.coordinates() - full.coordinates(), axis=1)

    hb_pairs = [[_address(full, i), _address(full, j)] for i, j, kind in pl if kind == "hbond"]
    translation = outcome.transform.translation
    report = ModelReport(
        model=f"model-{number}",
        sequence=sequence,
        template=cfg.template,
        seed=seed,
        contact_pairs=[list(p) for p in cfg.contact.pairs],
        distances_initial=d_initial,
        distances_optimized=d_opt,
        distances_final=pair_distances(final, designated_pairs(final, cfg.contact)),
        fitted_transform=outcome.transform.to_row(),
        chain_transforms={k: t.to_row() for k, t in outcome.chain_transforms.items()},
        refit_atoms=[r[0] for r in outcome.refit_pairs],
        reference_translation=REPORTED_CONTACT_TRANSLATION.tolist(),
        translation_deviation=(translation - REPORTED_CONTACT_TRANSLATION).tolist(),
        optimizer_best_value=outcome.result.best_value,
        optimizer_iterations=outcome.result.iterations,
        optimizer_attempts=outcome.attempts,
        optimizer_converged=outcome.converged,
        energy_before_refine=_energy_dict(e_before),
        energy_after_refine=_energy_dict(e_after),
        refine_steps=len(trace) - 1,
        max_refine_displacement=float(shift.max()) if len(shift) else 0.0,
        hbond_criterion=f"backbone N...O < {cfg.hb_cutoff} A, different chains or |i-j| > 1",
        hbond_pair_count=len(hb_pairs),
        hbond_pairs=hb_pairs,
        stacking=STACKING_NOTE,
        config=cfg.to_dict(),
    )
    return final, report


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Build every configured model; a failing model does not stop the others."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    template = load_template(cfg)
    reports, failures, files = [], {}, []
    for number, sequence in enumerate(cfg.sequences, start=1):
        name = f"model-{number}"
        try:
            model, report = build_model(template, sequence, cfg, number)
        except (StericZipperError, ValueError, LookupError, ArithmeticError) as exc:
            logger.error("%s (%s) failed: %s", name, sequence, exc)
            failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        pdb_path = out_dir / f"{name}-{sequence}.pdb"
        json_path = out_dir / f"{name}-report.json"
        pdb_path.write_text(write_pdb(model, renumber=True), encoding="utf-8")
        json_path.write_text(report.to_json(), encoding="utf-8")
        files += [pdb_path, json_path]
        reports.append(report)
    return PipelineResult(reports, failures, files)
