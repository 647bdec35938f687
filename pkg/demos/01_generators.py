"""Generator matrices, volumes and coordinate arrays of the small examples.

Run: python3 demos/01_generators.py
"""
import numpy as np

from polarlattice import (
    ConvolutionProfile,
    RateProfile,
    build_generator,
    coordinate_array,
    encode_lattice,
    integer_from_array,
    is_lattice_point,
    lift_convolution,
    log2_volume,
    pac_generator,
)

# D2 checkerboard: N = 2, one level, I_1 = {2}
d2 = build_generator(RateProfile(2, [{2}]))
print("D2 generator\n", d2.gen)
print("(1, 0) in D2?", is_lattice_point([1, 0], d2), "  (1, 1) in D2?", is_lattice_point([1, 1], d2))

# N = 4, two levels
prof = RateProfile(4, [{4}, {2, 3, 4}])
spec = build_generator(prof)
print("\nN=4 generator\n", spec.gen)
print("log2 volume", log2_volume(prof), " |det| =", round(abs(np.linalg.det(spec.gen))))
print("encode (1,1,0,0) ->", encode_lattice([1, 1, 0, 0], spec))

# precoded version of the same profile
T = ((1, 0, 1, 1), (0, 1, 0, 1), (0, 0, 1, 0), (0, 0, 0, 1))
conv = ConvolutionProfile(4, matrix=T)
tbar = lift_convolution(conv, prof)
print("\nlifted convolution")
for row in tbar:
    print("  [" + ", ".join(str(v) for v in row) + "]")
print("precoded generator\n", pac_generator(conv, prof).gen)

# coordinate array, least significant row first
lam = [3, 2, 1, 0, -1, -2, -3, -4]
ca = coordinate_array(lam, 4)
print("\ncoordinate array of", lam)
print(ca.rows)
print("residual", ca.residual, " back:", integer_from_array(ca))
