"""Command-line front end.

Exit codes: 0 ok, 1 input could not be parsed, 2 fetch failed, 3 geometry or
energy error, 4 at least one pipeline model failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .assembly import (
    SEQUENCE_PRESETS,
    PipelineConfig,
    build_core,
    designated_pairs,
    load_template,
    optimize_contact,
    pair_distances,
    run_pipeline,
)
from .energy import EnergyParams, HBOND, VDW, PairList, detect_hbonds, load_energy_params, pairs_from_addresses, total_energy
from .exceptions import (
    AmbiguousAtomError,
    AtomNotFoundError,
    FetchError,
    LabelError,
    ObjectiveError,
    PDBFormatError,
    PDBParseError,
    SingularityError,
    StructureError,
)
from .fetch import FetchConfig, cache_path, fetch_entry
from .mutation import mutate_sequence
from .optimizer import write_trace_csv
from .pdb_io import read_pdb, write_pdb

EXIT_OK, EXIT_PARSE, EXIT_FETCH, EXIT_GEOMETRY, EXIT_PARTIAL = 0, 1, 2, 3, 4

logger = logging.getLogger("stericzipper")


def _fetch_config(args) -> FetchConfig:
    cfg = FetchConfig()
    if args.cache_dir:
        cfg.cache_dir = Path(args.cache_dir)
    if args.base_url:
        cfg.base_url = args.base_url.rstrip("/")
    return cfg


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "template", None):
        cfg.template = args.template
    if getattr(args, "sequences", None):
        seqs = list(args.sequences)
        cfg.sequences = list(SEQUENCE_PRESETS[seqs[0]]) if seqs[0] in SEQUENCE_PRESETS and len(seqs) == 1 else seqs
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    if args.cache_dir:
        cfg.cache_dir = args.cache_dir
    if args.base_url:
        cfg.base_url = args.base_url
    return cfg


def read_pair_file(path, s) -> PairList:
    """Lines ``<address> <address> [vdw|hbond]``; ``#`` starts a comment."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] not in (VDW, HBOND)):
                raise ValueError(f"{path}:{lineno}: expected '<atom> <atom> [vdw|hbond]'")
            kind = parts[2] if len(parts) == 3 else VDW
            pairs.append(pairs_from_addresses(s, [(parts[0], parts[1])], kind).pairs[0])
    return PairList(tuple(pairs))


# ------------------------------------------------------------------ commands


def cmd_fetch(args) -> int:
    cfg = _fetch_config(args)
    fetch_entry(cfg, args.id)
    print(cache_path(cfg, args.id))
    return EXIT_OK


def cmd_mutate(args) -> int:
    s = read_pdb(args.file)
    chains = args.chain or s.chain_ids
    for chain in chains:
        s = mutate_sequence(s, chain, args.seq)
    text = write_pdb(s, renumber=True)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_energy(args) -> int:
    s = read_pdb(args.file)
    params = load_energy_params(args.params) if args.params else EnergyParams()
    cutoff = args.hb_cutoff if args.hb_cutoff is not None else params.hb_cutoff
    pl = read_pair_file(args.pairs, s) if args.pairs else detect_hbonds(s, cutoff)
    e = total_energy(s, params.lj, params.hb, pl)
    if args.json:
        print(json.dumps({"vdw": e.vdw, "hbond": e.hbond, "total": e.total, "pairs": len(pl)}, sort_keys=True))
    else:
        print(f"{e.vdw:.6f} {e.hbond:.6f} {e.total:.6f}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _pipeline_config(args)
    core = build_core(load_template(cfg), args.seq or cfg.sequences[0], cfg)
    outcome = optimize_contact(core, cfg, seed=cfg.seed)
    pl = designated_pairs(core, cfg.contact)
    if args.trace:
        write_trace_csv(outcome.result, args.trace)
    if args.output:
        Path(args.output).write_text(write_pdb(outcome.structure, renumber=True), encoding="utf-8")
    report = {
        "best_value": outcome.result.best_value,
        "iterations": outcome.result.iterations,
        "distances_initial": pair_distances(core, pl),
        "distances_optimized": pair_distances(outcome.structure, pl),
        "transform": outcome.transform.to_text(),
        "chain_transforms": {k: t.to_text() for k, t in sorted(outcome.chain_transforms.items())},
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _pipeline_config(args)
    result = run_pipeline(cfg)
    summary = {
        "models": [r.model for r in result.reports],
        "files": [str(p) for p in result.files],
        "failures": result.failures,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if result.ok else EXIT_PARTIAL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stericzipper", description="Steric-zipper fibril model builder.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="root random seed (overrides the config file)")
    parser.add_argument("--cache-dir", default=None, help="structure download cache directory")
    parser.add_argument("--base-url", default=None, help="structure archive base URL")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download an entry into the cache and print its path")
    p.add_argument("id", help="4-character entry id, e.g. 3NHC")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("mutate", help="mutate chains to an A/G sequence and write PDB")
    p.add_argument("file", help="input PDB file")
    p.add_argument("--chain", action="append", help="chain to mutate (repeatable; default all)")
    p.add_argument("--seq", required=True, help="one-letter A/G sequence, e.g. AAAAGA")
    p.add_argument("-o", "--output", help="output PDB (default stdout)")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("energy", help="print vdw, hbond and total energy")
    p.add_argument("file", help="input PDB file")
    p.add_argument("--params", help="energy parameter file (key = value lines)")
    p.add_argument("--pairs", help="pair file; disables automatic H-bond detection")
    p.add_argument("--hb-cutoff", type=float, default=None, help="N...O detection cutoff in A")
    p.add_argument("--json", action="store_true", help="print JSON instead of plain text")
    p.set_defaults(func=cmd_energy)

    for name, func, help_text in (
        ("optimize", cmd_optimize, "optimize the inter-sheet contact of one model core"),
        ("pipeline", cmd_pipeline, "build all configured models"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="pipeline config file (JSON)")
        p.add_argument("--template", help="'synthetic', a PDB path or an entry id")
        p.set_defaults(func=func)
        if name == "optimize":
            p.add_argument("--seq", help="model sequence (default: first configured)")
            p.add_argument("--trace", help="write the annealing trace as CSV")
            p.add_argument("-o", "--output", help="write the optimized A/B/G/H core as PDB")
        else:
            p.add_argument("--sequences", nargs="+", help="model sequences, or a preset name (windows, literal)")
            p.add_argument("--output-dir", help="directory for model files and reports")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FETCH
    except (SingularityError, ObjectiveError, LabelError, AtomNotFoundError, AmbiguousAtomError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (PDBParseError, PDBFormatError, StructureError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
