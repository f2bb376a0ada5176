"""
Validation script for the bundled data files.

Loads every file under data/, rebuilds the same family from src/bundles.py
and checks that both give the same poset, that the recorded counts match,
and that the presheaf, local duality and lattice checks pass.

Usage:
    python scripts/validate_bundles.py
"""

import sys
import traceback
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.bundles import compare_counts, family_for, observed_counts  # noqa: E402
from src.correspondences import check_orthomodular, lattice_for  # noqa: E402
from src.serialization import load  # noqa: E402
from src.spectral_presheaf import (  # noqa: E402
    check_functoriality,
    check_surjectivity,
    local_duality_roundtrip,
    presheaf_for,
)

from build_bundles import BUNDLED_FILES  # noqa: E402


def validate_file(name: str, path: Path) -> bool:
    print(f"\n{name}: {path}")
    if not path.exists():
        print("   ❌ File not found; run python scripts/build_bundles.py")
        return False

    family = load(path)
    poset = family.poset()
    ok = True

    if poset != family_for(name).poset():
        print("   ❌ Poset differs from the one built in src/bundles.py")
        ok = False
    else:
        print(f"   ✅ {len(poset)} contexts, {len(poset.maximal())} maximal")

    mismatches = compare_counts(dict(family.expected), observed_counts(poset))
    for key, expected, observed in mismatches:
        print(f"   ❌ {key}: expected {expected}, observed {observed}")
    if not mismatches:
        print(f"   ✅ Recorded counts match: {dict(family.expected)}")
    ok = ok and not mismatches

    sigma = presheaf_for(poset)
    for report in (check_functoriality(sigma), check_surjectivity(sigma), check_orthomodular(lattice_for(poset))):
        marker = "✅" if report.passed else "❌"
        print(f"   {marker} {report.title}")
        ok = ok and report.passed

    duality = all(local_duality_roundtrip(c) for c in poset.contexts)
    print(f"   {'✅' if duality else '❌'} Local duality on every context")
    return ok and duality


def validate_bundles() -> bool:
    print("="*60)
    print("BUNDLED DATA VALIDATION")
    print("="*60)

    results = [validate_file(name, path) for name, path in BUNDLED_FILES.items()]

    print("\n" + "="*60)
    if all(results):
        print("✅ VALIDATION COMPLETE - ALL BUNDLED FILES PASS")
    else:
        print(f"❌ {results.count(False)} BUNDLED FILE(S) FAILED")
    print("="*60)
    return all(results)


def main():
    try:
        return 0 if validate_bundles() else 1
    except Exception as e:
        print(f"\n❌ Validation failed: {e}")
        traceback.print_exc()
        return 1


if __name__ == '__main__':
    sys.exit(main())
