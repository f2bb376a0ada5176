"""
Regenerate the bundled data files from the families in src/bundles.py.

Writes data/mermin_peres.json, data/m2_fan.json and
data/cn_partitions/c1.json ... c4.json in canonical JSON.

Usage:
    python scripts/build_bundles.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.bundles import family_for  # noqa: E402
from src.serialization import save  # noqa: E402

DATA_DIR = Path("data")
BUNDLED_FILES = {
    'mermin': DATA_DIR / "mermin_peres.json",
    'm2fan': DATA_DIR / "m2_fan.json",
    'c1': DATA_DIR / "cn_partitions" / "c1.json",
    'c2': DATA_DIR / "cn_partitions" / "c2.json",
    'c3': DATA_DIR / "cn_partitions" / "c3.json",
    'c4': DATA_DIR / "cn_partitions" / "c4.json",
}


def build_bundles():
    print("="*60)
    print("BUILDING BUNDLED DATA FILES")
    print("="*60)

    for name, path in BUNDLED_FILES.items():
        family = family_for(name)
        save(path, family)
        expected = dict(family.expected)
        print(f"   ✅ {path}: {expected.get('contexts')} contexts expected")

    print("\n" + "="*60)
    print(f"✅ WROTE {len(BUNDLED_FILES)} FILES")
    print("="*60)
    print("\nCheck them with:")
    print("  python scripts/validate_bundles.py")


def main():
    build_bundles()


if __name__ == '__main__':
    main()
