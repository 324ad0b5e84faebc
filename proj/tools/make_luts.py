#!/usr/bin/env python3
"""Generates the bundled .cube files in data/luts.

Each lattice is a closed-form color grade so the files are reproducible:
    python3 tools/make_luts.py data/luts
"""
import math
import pathlib
import sys


def clamp(v):
    return min(1.0, max(0.0, v))


def warm(r, g, b):
    return clamp(r * 1.08 + 0.03), clamp(g * 1.01 + 0.01), clamp(b * 0.86)


def cool(r, g, b):
    return clamp(r * 0.9), clamp(g * 0.98 + 0.02), clamp(b * 1.1 + 0.04)


def faded(r, g, b):
    return tuple(clamp(0.08 + 0.84 * v) for v in (r, g, b))


def teal_orange(r, g, b):
    luma = 0.2126 * r + 0.7152 * g + 0.0722 * b
    t = 0.5 - 0.5 * math.cos(math.pi * luma)
    return (clamp(r + 0.12 * (t - 0.5)), clamp(g + 0.03 * (t - 0.5)), clamp(b - 0.15 * (t - 0.5)))


def mono_sepia(r, g, b):
    luma = 0.2126 * r + 0.7152 * g + 0.0722 * b
    return clamp(luma * 1.07), clamp(luma * 0.95), clamp(luma * 0.78)


def s_curve(r, g, b):
    return tuple(clamp(v + 0.12 * math.sin(2 * math.pi * v)) for v in (r, g, b))


GRADES = {
    "warm": (17, warm),
    "cool": (17, cool),
    "faded": (17, faded),
    "teal_orange": (33, teal_orange),
    "sepia": (17, mono_sepia),
    "s_curve": (33, s_curve),
}


def write_cube(path, title, size, fn):
    with open(path, "w") as f:
        f.write(f'TITLE "{title}"\n')
        f.write(f"LUT_3D_SIZE {size}\n")
        step = 1.0 / (size - 1)
        for b in range(size):
            for g in range(size):
                for r in range(size):
                    out = fn(r * step, g * step, b * step)
                    f.write(" ".join(f"{v:.6f}" for v in out) + "\n")


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/luts")
    out.mkdir(parents=True, exist_ok=True)
    for name, (size, fn) in GRADES.items():
        write_cube(out / f"{name}.cube", name, size, fn)


if __name__ == "__main__":
    main()
