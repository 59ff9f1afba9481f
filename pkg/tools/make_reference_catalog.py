"""Regenerate src/svmf/data/reference_catalog.tsv.

Functional-group rows are placeholders (name only, empty SMARTS column):
the curated list itself is not distributed with this package.  Carbon
backbone rows carry simple 3-6 carbon chain/ring patterns.
"""

from pathlib import Path

N_FUNCTIONAL = 1534

CARBON_BACKBONES = [
    ("propane", "CCC"),
    ("propene", "C=CC"),
    ("propyne", "C#CC"),
    ("butane", "CCCC"),
    ("but-1-ene", "C=CCC"),
    ("but-2-ene", "CC=CC"),
    ("but-1-yne", "C#CCC"),
    ("but-2-yne", "CC#CC"),
    ("butadiene", "C=CC=C"),
    ("isobutane", "CC(C)C"),
    ("pentane", "CCCCC"),
    ("pent-1-ene", "C=CCCC"),
    ("pent-2-ene", "CC=CCC"),
    ("pentadiene", "C=CC=CC"),
    ("neopentane", "CC(C)(C)C"),
    ("isopentane", "CC(C)CC"),
    ("hexane", "CCCCCC"),
    ("hex-1-ene", "C=CCCCC"),
    ("hexatriene", "C=CC=CC=C"),
    ("cyclopropane", "C1CC1"),
    ("cyclobutane", "C1CCC1"),
    ("cyclopentane", "C1CCCC1"),
    ("cyclopentene", "C1=CCCC1"),
    ("cyclohexane", "C1CCCCC1"),
    ("cyclohexene", "C1=CCCCC1"),
    ("cyclohexadiene", "C1=CC=CCC1"),
    ("benzene", "c1ccccc1"),
]


def main() -> None:
    assert len(CARBON_BACKBONES) == 27
    rows = ["class_id\tkind\tname\tsmarts"]
    for i in range(N_FUNCTIONAL):
        rows.append(f"{i}\tFG\tfunctional_group_{i:04d}\t")
    for j, (name, smarts) in enumerate(CARBON_BACKBONES):
        rows.append(f"{N_FUNCTIONAL + j}\tCB\tcarbon_{name}\t{smarts}")
    out = Path(__file__).resolve().parents[1] / "src" / "svmf" / "data" / "reference_catalog.tsv"
    out.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    print(f"wrote {len(rows) - 1} classes to {out}")


if __name__ == "__main__":
    main()
