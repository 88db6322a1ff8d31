"""Generator and integrity oracle for the base-graph-2 CSV asset.

The asset fixes the 42x52 prototype of the short-block base graph: 10
systematic columns, a 4x4 double-diagonal core parity block (columns 10..13)
and one identity extension column per remaining row.  The support pattern
below carries the canonical 197 entries.  Structural shifts (the core
double diagonal and the extension identity) are pinned; every other shift
value is filled deterministically from a fixed seed, uniform on [0, 384),
and reduced mod Z only when the graph is lifted.

Re-running this script must reproduce src/shortpacket/data/bg2.csv byte for
byte; test_ldpc.py asserts that.
"""

import io
import pathlib

import numpy as np

VERSION = "bg2-v1"
FILL_SEED = 1212
N_SETS = 8

# row -> sorted non-extension support (columns 0..13); the extension column
# for row r >= 4 is always 10 + r and is appended automatically
SUPPORT = {
    0: [0, 1, 2, 3, 6, 9, 10, 11],
    1: [0, 3, 4, 5, 6, 7, 8, 9, 11, 12],
    2: [0, 1, 3, 4, 8, 10, 12, 13],
    3: [1, 2, 4, 5, 6, 7, 8, 9, 10, 13],
    4: [0, 1, 11],
    5: [0, 1, 5, 7, 11],
    6: [0, 5, 7, 9, 11],
    7: [1, 5, 7, 11, 13],
    8: [0, 1, 12],
    9: [1, 8, 10, 11],
    10: [0, 1, 6, 7],
    11: [0, 7, 9, 13],
    12: [1, 3, 11],
    13: [0, 1, 8, 13],
    14: [1, 6, 11, 13],
    15: [0, 10, 11],
    16: [1, 9, 11, 12],
    17: [1, 5, 11, 12],
    18: [0, 6, 7],
    19: [0, 1, 10],
    20: [1, 4, 11],
    21: [0, 8, 13],
    22: [1, 2],
    23: [0, 3, 5],
    24: [1, 2, 9],
    25: [0, 5],
    26: [2, 7, 12, 13],
    27: [0, 6],
    28: [1, 2, 5],
    29: [0, 4],
    30: [2, 5, 7, 9],
    31: [1, 13],
    32: [0, 5, 12],
    33: [2, 7, 10],
    34: [0, 12, 13],
    35: [1, 5, 11],
    36: [0, 2, 7],
    37: [10, 13],
    38: [1, 5, 11],
    39: [0, 7, 12],
    40: [2, 10, 13],
    41: [1, 5, 11],
}

# pinned structural shifts (same for the reasons the standard pins them):
# the core double diagonal is shift 0, and exactly one of the three column-10
# core entries is 1 per set so the summed core rows stay invertible
PINNED = {
    (0, 10): [0, 0, 0, 1, 0, 0, 0, 1],
    (0, 11): [0] * N_SETS,
    (1, 11): [0] * N_SETS,
    (1, 12): [0] * N_SETS,
    (2, 10): [1, 1, 1, 0, 1, 1, 1, 0],
    (2, 12): [0] * N_SETS,
    (2, 13): [0] * N_SETS,
    (3, 10): [0, 0, 0, 1, 0, 0, 0, 1],
    (3, 13): [0] * N_SETS,
}


def render() -> str:
    rng = np.random.default_rng(FILL_SEED)
    buf = io.StringIO()
    buf.write("# base graph 2 prototype, 42 rows x 52 cols\n")
    buf.write("# line format: row;col;v0;v1;v2;v3;v4;v5;v6;v7\n")
    buf.write("# vK = cyclic shift for lifting set K, reduced mod Z when lifted\n")
    buf.write(f"# version: {VERSION}\n")
    count = 0
    for r in range(42):
        cols = list(SUPPORT[r])
        if r >= 4:
            cols = cols + [10 + r]
        for c in cols:
            if r >= 4 and c == 10 + r:
                shifts = [0] * N_SETS          # extension identity
            elif (r, c) in PINNED:
                shifts = PINNED[(r, c)]
            else:
                shifts = [int(v) for v in rng.integers(0, 384, N_SETS)]
            buf.write(f"{r};{c};" + ";".join(str(s) for s in shifts) + "\n")
            count += 1
    assert count == 197, count
    return buf.getvalue()


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "shortpacket" / "data" / "bg2.csv"
    out.write_text(render(), encoding="utf-8")
    print(f"wrote {out} ({len(render())} bytes, 197 entries)")
