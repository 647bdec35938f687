"""Multilevel decoding of the N = 16 polar lattice and a short error-rate sweep.

Run: python3 demos/04_decoding.py
"""
import numpy as np

from polarlattice import DecoderConfig, RateProfile, build_generator, encode_lattice, multilevel_decode
from polarlattice.simulate import vnr_sweep

spec = build_generator(RateProfile(16, [{8, 12, 14, 15, 16}, {4, 6, 7, 8, 12, 14, 15, 16}]))
rng = np.random.default_rng(0)
lam = rng.integers(-8, 9, 16)
x = encode_lattice(lam, spec)
y = x + rng.normal(0, 0.3, 16)
res = multilevel_decode(y, 0.3, spec, DecoderConfig("SCL", 4))
print("message ", lam)
print("decoded ", res.lam, " correct:", np.array_equal(res.lam, lam))
print("level 1 ", res.levels[0])
print("level 2 ", res.levels[1])

print("\nsigma   nvnr(dB)  decoder  P_e       95% CI")
for cfg in (DecoderConfig("SC"), DecoderConfig("SCL", 8)):
    for rec in vnr_sweep(spec, cfg, sigmas=[0.4, 0.35, 0.3, 0.25], trials=20_000, seed=1,
                         stop_at_errors=200):
        print(f"{rec.sigma:5.2f}   {rec.nvnr_db:7.3f}   {rec.decoder:4s} {rec.p_e:.5f}  "
              f"[{rec.ci_low:.5f}, {rec.ci_high:.5f}]  ({rec.errors}/{rec.trials})")
