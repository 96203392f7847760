"""Regenerate the bundled sample gazetteers from Faker.

Faker is only needed here, not at runtime:

    pip install faker
    python tools/make_gazetteers.py
"""
import json
import zlib
from pathlib import Path

from faker import Faker

LOCALES = {
    "english.json": ["en-US", "en-CA", "en-IN"],
    "german.json": ["de-DE", "de-AT", "de-CH"],
    "hindi.json": ["hi-IN"],
}
PER_COUNT = 60
LOC_COUNT = 60
OUT = Path(__file__).resolve().parent.parent / "src" / "advner" / "data"


def unique(draw, n):
    seen = []
    for _ in range(n * 20):
        s = " ".join(draw().split())
        if s and s not in seen:
            seen.append(s)
        if len(seen) == n:
            break
    return seen


def _place(fake):
    # en_CA cities are synthetic; mix in provinces for real place names
    if hasattr(fake, "province") and fake.random_int(0, 3) == 0:
        return fake.province()
    return fake.city()


def main():
    for fname, locales in LOCALES.items():
        gaz = {}
        for code in locales:
            fake = Faker(code.replace("-", "_"))
            fake.seed_instance(zlib.crc32(code.encode()))
            gaz[code] = {
                "PER": unique(fake.name, PER_COUNT),
                "LOC": unique(lambda: _place(fake), LOC_COUNT),
            }
        with open(OUT / fname, "w", encoding="utf-8") as f:
            json.dump(gaz, f, ensure_ascii=False, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
