#!/usr/bin/env python3
"""Re-derive the frozen reference-twist tuning and report the drift.

Run from the repository root after an editable install:

    python3 scripts/tune_cascade.py [samples_per_axis]

Prints the analytic seed radius, the solved (radius, angle) pair, the frozen
constants shipped in cellmix.blocks, and the advected half-tile means of the
solved block through both measurement paths.
"""

import sys

import numpy as np

from cellmix.blocks import (
    M1_ANGLE,
    M1_RADIUS,
    backward_feet_tile_means,
    central_twist_radius,
    contour_tile_means,
    fit_reference_block,
    reference_field_block,
)


def main() -> int:
    samples = int(sys.argv[1]) if len(sys.argv) > 1 else 1600
    print(f"analytic pi-twist seed radius: {central_twist_radius()!r}")
    radius, angle = fit_reference_block(samples_per_axis=samples, verbose=True)
    print(f"solved:  radius={radius!r} angle={angle!r}")
    print(f"frozen:  radius={M1_RADIUS!r} angle={M1_ANGLE!r}")
    print(f"drift:   radius={abs(radius - M1_RADIUS):.2e} angle={abs(angle - M1_ANGLE):.2e}")
    block = reference_field_block(radius, angle)
    feet = backward_feet_tile_means(block, 800)
    contour = contour_tile_means(block)
    print("feet means:\n", np.array2string(feet, precision=8))
    print("contour means:\n", np.array2string(contour, precision=8))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
