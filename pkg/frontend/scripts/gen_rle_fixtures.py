"""Regenerate tests/fixtures/rle_cases.json from the service-side encoder.

Run from the repository root after any change to the RLE contract:

    python3 frontend/scripts/gen_rle_fixtures.py

The TypeScript suite asserts its codec agrees with every case byte for byte,
which keeps the two implementations locked together.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from clickseg.service import encode_rle

N_CASES = 1000


def main() -> None:
    rng = np.random.default_rng(0)
    cases = []
    for i in range(N_CASES):
        height = int(rng.integers(1, 17))
        width = int(rng.integers(1, 17))
        density = float(rng.uniform(0.0, 1.0))
        bitmap = rng.random((height, width)) < density
        if i % 50 == 0:
            bitmap = np.full((height, width), i % 100 == 0)
        payload = encode_rle(bitmap)
        cases.append(
            {
                "width": payload["width"],
                "height": payload["height"],
                "counts": payload["counts"],
                "bits": "".join("1" if b else "0" for b in bitmap.ravel()),
            }
        )
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "rle_cases.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(cases, separators=(",", ":")) + "\n")
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main()
