"""Stock synthetic suites used by the acceptance tests and the CLI.

``degraded_suite`` models low-contact patches: disks where ridge contrast
fades to 10% around mid-gray, plus mild blur and sensor noise. Such patches
fall under the Gabor segmentation threshold, so the standalone enhancer
leaves blank holes that split the ridges crossing them.
"""

from __future__ import annotations

import numpy as np

from .evaluation import SuiteCase
from .synth import Arch, Constant, DegradeParams, SynthParams

CLEAN_FREQUENCIES = (1 / 8, 1 / 10, 1 / 12)


def clean_suite(size: int = 350, thetas=(30.0, 100.0), curvatures=(0.006, 0.012),
                frequencies=CLEAN_FREQUENCIES, seed: int = 0) -> list[SuiteCase]:
    """Every (orientation mode, frequency) combination, undegraded."""
    modes = [Constant(t) for t in thetas] + [Arch(c) for c in curvatures]
    cases = []
    for m, mode in enumerate(modes):
        for f, freq in enumerate(frequencies):
            tag = f"const{mode.theta_deg:g}" if isinstance(mode, Constant) else f"arch{mode.curvature:g}"
            cases.append(SuiteCase(f"clean-{tag}-p{round(1 / freq)}",
                                   SynthParams(size, size, freq, mode, seed=seed + 10 * m + f)))
    return cases


def degraded_suite(n: int = 20, size: int = 350, seed: int = 0, gap_count: int = 8,
                   gap_radius: float = 30.0, gap_strength: float = 0.9, gap_level: float = 0.5,
                   blur_sigma: float = 1.0, noise_sigma: float = 0.03) -> list[SuiteCase]:
    """``n`` fragmented cases alternating straight and arched ridges."""
    cases = []
    for k in range(n):
        rng = np.random.default_rng(seed + k)
        if k % 2 == 0:
            mode = Constant(round(float(rng.uniform(0.0, 180.0)), 3))
        else:
            mode = Arch(round(float(rng.uniform(0.004, 0.012)), 6))
        freq = CLEAN_FREQUENCIES[k % 3]
        cases.append(SuiteCase(
            f"degraded-{k:02d}",
            SynthParams(size, size, freq, mode, seed=seed + k),
            DegradeParams(gap_count, gap_radius, blur_sigma, noise_sigma, seed=seed + 100 + k,
                          gap_strength=gap_strength, gap_level=gap_level)))
    return cases
