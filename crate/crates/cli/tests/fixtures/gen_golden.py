"""Writes ref.ngm, deg.ngm and golden.json: a neurogram pair plus its
NSIM evaluated by brute force over the 3x3 windows."""
import json
import math
import struct

ROWS, COLS = 6, 9


def lcg(seed):
    state = seed
    while True:
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        yield (state >> 11) / 2**53


def write(path, values, kind):
    header = {
        "fmt": "neurogram/1",
        "rows": ROWS,
        "cols": COLS,
        "cf_axis_hz": [250.0 * 2 ** (i / 2) for i in range(ROWS)],
        "bin_width_s": 0.0064 if kind == "MR" else 0.0001,
        "kind": kind,
        "fiber_type": "SUM",
        "metadata": {
            "stimulus_id": "golden",
            "level_db_spl": 65.0,
            "condition": "clean",
            "profile_id": path.split(".")[0],
            "seed": 0,
        },
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
        for row in values:
            for v in row:
                f.write(struct.pack("<d", v))


def nsim(r, d):
    g = [[math.exp(-(a * a + b * b) / 0.5) for b in (-1, 0, 1)] for a in (-1, 0, 1)]
    s = sum(map(sum, g))
    w = [[x / s for x in row] for row in g]
    big_l = max(map(max, r))
    c1, c3 = 0.01 * big_l, (0.03 * big_l) ** 2 / 2
    out = []
    for f in range(1, ROWS - 1):
        for t in range(1, COLS - 1):
            cells = [(a, b) for a in range(3) for b in range(3)]
            x = [r[f + a - 1][t + b - 1] for a, b in cells]
            y = [d[f + a - 1][t + b - 1] for a, b in cells]
            ww = [w[a][b] for a, b in cells]
            mx = sum(p * q for p, q in zip(ww, x))
            my = sum(p * q for p, q in zip(ww, y))
            vx = sum(p * (q - mx) ** 2 for p, q in zip(ww, x))
            vy = sum(p * (q - my) ** 2 for p, q in zip(ww, y))
            cxy = sum(p * (q - mx) * (z - my) for p, q, z in zip(ww, x, y))
            lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
            out.append(lum * (cxy + c3) / (math.sqrt(vx) * math.sqrt(vy) + c3))
    return sum(out) / len(out)


rng = lcg(2024)
ref = [[30 * next(rng) for _ in range(COLS)] for _ in range(ROWS)]
deg = [[max(0.0, v * 0.7 + 6 * (next(rng) - 0.5)) for v in row] for row in ref]
write("ref.ngm", ref, "MR")
write("deg.ngm", deg, "MR")
with open("golden.json", "w") as f:
    json.dump({"nsim": nsim(ref, deg)}, f)
    f.write("\n")
