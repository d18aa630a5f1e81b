"""Grid-search the stage-2 width rule (width = slope * 3n + offset, rounded to
the nearest multiple of 8) against the published RFA/FBS costs and the derived
ratio bands. Prints every (slope, offset) that satisfies all of them."""
import argparse
from dataclasses import replace

from dctpipe.cost import build_variant, count, load_config

TARGETS = {64: (5.40, 28.4), 32: (3.68, 26.2), 16: (3.18, 25.6)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slopes", type=float, nargs=3, default=(0.0, 3.0, 0.1), metavar=("LO", "HI", "STEP"))
    ap.add_argument("--offsets", type=int, nargs=3, default=(-64, 128, 4), metavar=("LO", "HI", "STEP"))
    args = ap.parse_args()
    base = load_config()
    resnet = count(build_variant("ResNet50", base)).flops
    lo, hi, step = args.slopes
    slopes = [round(lo + i * step, 6) for i in range(int(round((hi - lo) / step)) + 1)]
    for slope in slopes:
        for off in range(args.offsets[0], args.offsets[1] + 1, args.offsets[2]):
            cfg = replace(base, rfa_width_slope=slope, rfa_width_offset=off)
            reps = {n: count(build_variant(f"FBS({n})", cfg)) for n in TARGETS}
            if any(abs(reps[n].gflops - f) > 0.03 * f or abs(reps[n].mparams - p) > 0.01 * p
                   for n, (f, p) in TARGETS.items()):
                continue
            ratio = reps[64].flops / resnet
            cut = 1 - reps[16].flops / resnet
            if 1.37 <= ratio <= 1.43 and 0.165 <= cut <= 0.187:
                widths = {n: cfg.rfa_stage2(n)[0] for n in TARGETS}
                print(f"slope={slope:g} offset={off} ratio={ratio:.4f} fbs16_cut={cut:.4f} widths={widths}")


if __name__ == "__main__":
    main()
