"""
Spectral presheaf toolkit

Command-line surface: build context posets, spectral presheaves and their
morphisms over exact Gaussian rationals, count global sections and run the
isomorphism correspondence checks. Every command prints a report; --json
prints it as JSON instead.

Exit codes: 0 verified, 1 verification failure or invalid input, 2 usage error.
"""

import argparse
import json
import logging
import sys
from itertools import permutations
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.bundles import BUNDLE_NAMES, GeneratedFamily, PartitionFamily, load_bundle, verify_correspondence
from src.config import get_settings
from src.context_poset import ContextPoset, closure, full_abelian_poset
from src.correspondences import (
    aut_groups,
    check_lattice_iso,
    extend_lattice_iso,
    lattice_iso_from_partial_iso,
    partial_iso_from_presheaf_iso,
    presheaf_iso_from_partial_iso,
)
from src.errors import ObjectMismatchError, SpectralPresheafError
from src.presheaf_morphisms import (
    PresheafMorphism,
    check_naturality,
    functor_B_check,
    functor_S_check,
    induce_presheaf_morphism,
    is_presheaf_isomorphism,
)
from src.reports import CheckReport
from src.serialization import Workspace
from src.spectral_presheaf import (
    SpectralPresheaf,
    build_presheaf,
    check_functoriality,
    check_surjectivity,
    global_sections,
    global_sections_bruteforce,
    local_duality_roundtrip,
)
from src.star_algebra import UnitalStarHom, diagonal_embedding, permutation_hom

logger = logging.getLogger(__name__)

SECTIONS_NOTE = "counts are relative to the stored context family, not the full context category"


# inputs

def _poset_from_file(workspace: Workspace, path: str) -> ContextPoset:
    obj = workspace.fetch(path)
    if isinstance(obj, ContextPoset):
        return obj
    if isinstance(obj, (GeneratedFamily, PartitionFamily)):
        return obj.poset()
    if isinstance(obj, SpectralPresheaf):
        return obj.poset
    raise ObjectMismatchError(f"{path} does not describe a context poset", witness=type(obj).__name__)


def _poset_from_args(args) -> ContextPoset:
    if getattr(args, 'full_abelian', None) is not None:
        return full_abelian_poset(args.full_abelian)
    if getattr(args, 'bundle', None):
        return load_bundle(args.bundle).poset
    return _poset_from_file(args.workspace, args.poset)


def _presheaf_from_args(args) -> SpectralPresheaf:
    if getattr(args, 'presheaf', None):
        sigma = args.workspace.fetch(args.presheaf)
        if not isinstance(sigma, SpectralPresheaf):
            raise ObjectMismatchError(f"{args.presheaf} is not a presheaf document", witness=type(sigma).__name__)
        return sigma
    return build_presheaf(_poset_from_args(args))


def _load_hom(workspace: Workspace, path) -> UnitalStarHom:
    h = workspace.fetch(path)
    if not isinstance(h, UnitalStarHom):
        raise ObjectMismatchError(f"{path} is not a hom document", witness=type(h).__name__)
    return h


def _posets_by_label(workspace: Workspace, paths: Sequence[str]) -> Dict[str, ContextPoset]:
    posets = {}
    for path in paths or ():
        poset = _poset_from_file(workspace, path)
        posets[poset.algebra.label] = poset
    return posets


def default_functor_homs() -> List[UnitalStarHom]:
    """The embedding chain C^2 -> C^3 -> C^4 and the six automorphisms of C^3."""
    homs = [diagonal_embedding(2, (1, 2)), diagonal_embedding(3, (1, 1, 2))]
    homs += [permutation_hom(3, p) for p in permutations(range(3))]
    return homs


def _write(args, obj):
    label = args.workspace.put(str(Path(args.out)), obj)
    args.workspace.save(label, args.out)


# commands

def cmd_build_poset(args) -> CheckReport:
    if args.generators:
        poset = _poset_from_file(args.workspace, args.generators)
    else:
        poset = _poset_from_args(args)
    maximal = poset.maximal()
    report = CheckReport(title=f"{len(poset)} contexts, {len(maximal)} maximal",
                         claim="context category C(A) as a finite intersection-closed family")
    report.values.update({
        'algebra': poset.algebra.label,
        'contexts': len(poset),
        'maximal': len(maximal),
        'covers': len(poset.covers()),
    })
    report.add("closure is a fixed point", closure(poset.algebra, list(poset.contexts)) == poset)
    if args.out:
        _write(args, poset)
    return report


def cmd_presheaf(args) -> CheckReport:
    poset = _poset_from_args(args)
    sigma = build_presheaf(poset)
    report = CheckReport(title=f"Spectral presheaf over {len(poset)} contexts",
                         claim="the spectral presheaf of A")
    report.values['components'] = list(sigma.components)
    report.extend(check_functoriality(sigma))
    report.extend(check_surjectivity(sigma))
    failing = [c for c, context in enumerate(poset.contexts) if not local_duality_roundtrip(context)]
    report.add("local duality on every context", not failing, witness=failing[0] if failing else None)
    if args.out:
        _write(args, sigma)
    return report


def cmd_global_sections(args) -> CheckReport:
    sigma = _presheaf_from_args(args)
    sections = global_sections(sigma)
    report = CheckReport(title=f"{len(sigma.poset)} contexts, {len(sections)} sections",
                         claim="global sections of the spectral presheaf")
    report.values.update({'contexts': len(sigma.poset), 'sections': len(sections)})
    if not sections:
        report.values['note'] = SECTIONS_NOTE
    if not args.count_only:
        report.values['assignments'] = [list(s.assignment) for s in sections]
    if args.oracle:
        oracle = global_sections_bruteforce(sigma)
        report.add("backtracking agrees with exhaustive enumeration", oracle == sections,
                   witness=None if oracle == sections else [len(sections), len(oracle)])
    return report


def cmd_induce(args) -> CheckReport:
    ws = args.workspace
    h = _load_hom(ws, args.hom)
    source = _poset_from_file(ws, args.source_poset) if args.source_poset else full_abelian_poset(len(h.source.shape))
    target = _poset_from_file(ws, args.target_poset) if args.target_poset else full_abelian_poset(len(h.target.shape))
    m = induce_presheaf_morphism(h, build_presheaf(source), build_presheaf(target))
    report = CheckReport(title=f"S({h.name or 'h'}): Sigma({h.target.label}) -> Sigma({h.source.label})",
                         claim="S is a contravariant functor on unital *-homomorphisms")
    report.values.update({'base': list(m.base.table), 'isomorphism': is_presheaf_isomorphism(m)})
    report.add("induced morphism is natural", check_naturality(m))
    if args.out:
        _write(args, m)
    return report


def cmd_verify_functor(args) -> CheckReport:
    if args.homs:
        homs = [_load_hom(args.workspace, path) for path in sorted(Path(args.homs).glob('*.json'))]
    else:
        homs = default_functor_homs()
    posets = _posets_by_label(args.workspace, args.poset)
    report = CheckReport(title=f"Functoriality over {len(homs)} homs", claim="functors S and B")
    report.extend(functor_S_check(homs, posets), prefix="S: ")
    report.extend(functor_B_check(homs, posets), prefix="B: ")
    return report


def cmd_aut_groups(args) -> CheckReport:
    automorphisms = ()
    if args.bundle:
        bundle = load_bundle(args.bundle)
        poset, automorphisms = bundle.poset, bundle.automorphisms
    else:
        poset = _poset_from_args(args)
    return aut_groups(poset, star_automorphisms=automorphisms)


def cmd_roundtrip(args) -> CheckReport:
    sigma = _presheaf_from_args(args)
    m = args.workspace.fetch(args.iso)
    if not isinstance(m, PresheafMorphism):
        raise ObjectMismatchError(f"{args.iso} is not a presheaf morphism document", witness=type(m).__name__)
    if m.base.source != sigma.poset or m.base.target != sigma.poset:
        raise ObjectMismatchError("Isomorphism is not an automorphism of the given presheaf")

    report = CheckReport(title="Correspondence roundtrips for one presheaf automorphism",
                         claim="presheaf, partial algebra and lattice isomorphisms correspond bijectively")
    t = partial_iso_from_presheaf_iso(m)
    report.add("presheaf iso -> partial iso -> presheaf iso", presheaf_iso_from_partial_iso(t) == m)
    lattice_iso = lattice_iso_from_partial_iso(t)
    report.add("lattice iso preserves order, complements, meets and joins", check_lattice_iso(lattice_iso))
    back = extend_lattice_iso(lattice_iso, sigma.poset, sigma.poset)
    report.add("partial iso -> lattice iso -> partial iso", back == t)
    report.values['kappa'] = [list(k) for k in t.kappa]
    return report


def cmd_verify_correspondence(args) -> CheckReport:
    return verify_correspondence(args.algebra)


# parser

def _add_poset_source(parser: argparse.ArgumentParser, required: bool = True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument('--poset', '--file', dest='poset', help="poset, family or presheaf JSON file")
    group.add_argument('--full-abelian', type=int, metavar='N', help="full context poset of C^N")
    group.add_argument('--bundle', help=f"bundled example ({', '.join(BUNDLE_NAMES)} or cN)")
    return group


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='specpresheaf', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--json', action='store_true', help="print the report as JSON")
    # accepted after the subcommand too; SUPPRESS keeps the top-level value when absent
    output = argparse.ArgumentParser(add_help=False)
    output.add_argument('--json', action='store_true', default=argparse.SUPPRESS, help="print the report as JSON")
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('build-poset', parents=[output], help="close a generating family under intersection")
    group = _add_poset_source(p)
    group.add_argument('--generators', help="generated or partitions family JSON file")
    p.add_argument('--out', help="write the poset here")
    p.set_defaults(handler=cmd_build_poset)

    p = commands.add_parser('presheaf', parents=[output], help="build the spectral presheaf and check its laws")
    _add_poset_source(p)
    p.add_argument('--out', help="write the presheaf here")
    p.set_defaults(handler=cmd_presheaf)

    p = commands.add_parser('global-sections', parents=[output], help="enumerate global sections")
    group = _add_poset_source(p)
    group.add_argument('--presheaf', help="presheaf JSON file")
    p.add_argument('--count-only', action='store_true')
    p.add_argument('--oracle', action='store_true', help="cross-check against exhaustive enumeration")
    p.set_defaults(handler=cmd_global_sections)

    p = commands.add_parser('induce', parents=[output], help="presheaf morphism induced by a *-homomorphism")
    p.add_argument('--hom', required=True)
    p.add_argument('--source-poset', help="defaults to the full poset for abelian algebras")
    p.add_argument('--target-poset', help="defaults to the full poset for abelian algebras")
    p.add_argument('--out', help="write the morphism here")
    p.set_defaults(handler=cmd_induce)

    p = commands.add_parser('verify-functor', parents=[output], help="functor laws for S and B")
    p.add_argument('--homs', help="directory of hom JSON files (default: built-in C^2, C^3, C^4 maps)")
    p.add_argument('--poset', action='append', help="context poset for a nonabelian algebra (repeatable)")
    p.set_defaults(handler=cmd_verify_functor)

    p = commands.add_parser('aut-groups', parents=[output], help="automorphism groups and the maps between them")
    _add_poset_source(p)
    p.set_defaults(handler=cmd_aut_groups)

    p = commands.add_parser('roundtrip', parents=[output], help="presheaf, partial algebra and lattice roundtrips")
    group = _add_poset_source(p)
    group.add_argument('--presheaf', help="presheaf JSON file")
    p.add_argument('--iso', required=True, help="presheaf morphism JSON file")
    p.set_defaults(handler=cmd_roundtrip)

    p = commands.add_parser('verify-correspondence', parents=[output],
                            help="correspondence suite for a bundled example")
    p.add_argument('--algebra', required=True, choices=BUNDLE_NAMES)
    p.set_defaults(handler=cmd_verify_correspondence)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    args.workspace = Workspace()

    try:
        settings = get_settings()
        logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO))
        logger.info(f"[CLI] {args.command}")
        report = args.handler(args)
    except SpectralPresheafError as e:
        logger.error(f"[CLI] {args.command} failed: {e}", exc_info=True)
        if args.json:
            print(json.dumps(e.to_dict(), indent=2, sort_keys=True))
        else:
            print(f"❌ {type(e).__name__}: {e}")
            if e.witness is not None:
                print(f"   witness: {e.witness}")
        return 1

    if args.json:
        print(report.model_dump_json(indent=2))
    else:
        print(report.to_text())
    return 0 if report.passed else 1


if __name__ == '__main__':
    sys.exit(main())
