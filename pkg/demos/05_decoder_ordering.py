"""SC, SCL and precoded SCL on an N = 128, two-level lattice.

Usage: python3 demos/05_decoder_ordering.py [trials]   (default 20000)
The acceptance suite runs the same comparison with 100000 trials.
"""
import sys

from polarlattice import DecoderConfig, estimate_reliabilities, select_profile
from polarlattice.lattice import ConvolutionProfile, build_generator, pac_generator
from polarlattice.simulate import run_point

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
prof = select_profile(estimate_reliabilities(0.4, 128, 2, 20_000, seed=3), targets=(29, 90))
conv = ConvolutionProfile(128, taps=(2, 3, 5, 6))
runs = [(build_generator(prof), DecoderConfig("SC")),
        (build_generator(prof), DecoderConfig("SCL", 8)),
        (pac_generator(conv, prof), DecoderConfig("PAC-SCL", 8, conv))]
for spec, cfg in runs:
    rec = run_point(spec, cfg, 0.35, trials, seed=5)
    print(f"{spec.kind:6s} {cfg.kind:8s} L={cfg.list_size}  nvnr={rec.nvnr_db:.3f} dB  "
          f"P_e={rec.p_e:.5f} [{rec.ci_low:.5f}, {rec.ci_high:.5f}]")
