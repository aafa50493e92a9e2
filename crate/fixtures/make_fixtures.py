"""Regenerates the embedding fixtures in this directory.

Written against the byte layout directly (stdlib only) so the Rust reader
is checked against an independent writer. Output is deterministic.
"""

import json
import math
import random
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent
DIMS = 8
VARIANTS = ["M0", "M1", "M2", "M3", "M4"]


def write_gevk(path, rows):
    ids = [r[0] for r in rows]
    dims = len(rows[0][1])
    with open(path, "wb") as f:
        f.write(b"GEVK")
        f.write(struct.pack("<IQQB", 1, len(rows), dims, 1))
        for i in ids:
            b = i.encode("utf-8")
            f.write(struct.pack("<I", len(b)))
            f.write(b)
        for _, v in rows:
            f.write(struct.pack("<%df" % dims, *v))


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def main():
    rng = random.Random(7)

    # Known values for the cross-implementation check.
    write_gevk(
        HERE / "known_3x4.gevk",
        [
            ("a", [0.0, 1.0, -1.0, 0.5]),
            ("b", [2.0, -2.5, 1e-3, 3.25]),
            ("kitchen-é", [-0.125, 1024.0, 7.0, -65504.0]),
        ],
    )

    # Real-image features: two clusters.
    centres = [[1.5] * DIMS, [-1.5] * DIMS]
    reference = []
    for i in range(60):
        c = centres[i % 2]
        reference.append((f"real{i:03d}", [x + rng.gauss(0, 0.6) for x in c]))
    write_gevk(HERE / "reference.gevk", reference)

    # Generated features drift away from the clusters by variant.
    drift = {"M0": 1.2, "M1": 0.3, "M2": 0.6, "M3": 0.8, "M4": 1.0}
    for v in VARIANTS:
        rows = []
        for i in range(10):
            c = centres[i % 2]
            rows.append(
                (f"img{i:02d}", [x + rng.gauss(0, 0.6) + drift[v] * rng.choice([-1, 1]) for x in c])
            )
        write_gevk(HERE / f"giqa_{v}.gevk", rows)

    # Prompt embeddings plus image embeddings pulled towards them.
    prompts = [unit([rng.gauss(0, 1) for _ in range(DIMS)]) for _ in range(4)]
    names = ["open shelving", "transparent cabinetry", "non-slip flooring", "under-cabinet lighting"]
    write_gevk(HERE / "prompts.gevk", list(zip(names, prompts)))
    pull = {"M0": 0.5, "M1": 1.4, "M2": 1.1, "M3": 0.9, "M4": 0.8}
    for v in VARIANTS:
        rows = []
        for i in range(10):
            p = prompts[i % 4]
            rows.append(
                (f"img{i:02d}", unit([pull[v] * a + rng.gauss(0, 0.5) for a in p]))
            )
        write_gevk(HERE / f"clip_{v}.gevk", rows)

    manifest = {
        "records": [
            {"id": f"img{i:02d}", "source_uri": f"https://images.example/img{i:02d}.jpg", "prompt": names[i % 4]}
            for i in range(20)
        ],
        "split_ratios": [0.8, 0.1, 0.1],
        "seed": 42,
    }
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
