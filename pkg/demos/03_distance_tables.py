"""Minimum distance and minimal-vector counts of the N = 16 lattices.

The mod-2 precoded construction (kind "pac-d") gives the reference
counts 80/128/120/80/120/80 when v and -v are counted separately. The lifted real form
(kind "pac") is a different lattice with smaller counts; both are shown.

Run: python3 demos/03_distance_tables.py
"""
from polarlattice import ConvolutionProfile, RateProfile, build_generator, lattice_min_vectors
from polarlattice.analysis import spec_dmin
from polarlattice.lattice import construction_d_generator, pac_generator

prof = RateProfile(16, [{8, 12, 14, 15, 16}, {4, 6, 7, 8, 12, 14, 15, 16}])
rep = lattice_min_vectors(build_generator(prof))
print(f"polar: d2min={rep.d2min} N_min={rep.n_min}  other conventions {rep.alternatives}")
print("\nJ           d2min  N_min(pac-d)  N_min(pac)")
for J in [(1, 4), (2, 4), (3, 4), (1, 2, 4), (1, 3, 4), (2, 3, 4)]:
    conv = ConvolutionProfile(16, taps=J)
    d = construction_d_generator(conv, prof)
    p = pac_generator(conv, prof)
    print(f"{str(J):11s} {spec_dmin(d):5d}  {lattice_min_vectors(d).n_min:12d}  "
          f"{lattice_min_vectors(p).n_min:10d}")
