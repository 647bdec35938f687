"""Two-dimensional gluing: same packing radius as Z^2, fewer neighbours.

Run: python3 demos/06_gluing_2d.py
"""
from polarlattice import small_lattice_enumerate

for name, kw in [("Z^2", {"gen": [[1, 0], [0, 1]]}),
                 ("glued [[1, 1/2], [0, 1]]", {"gen": [[1, "1/2"], [0, 1]]}),
                 ("hexagonal A2", {"gram": [[1, "1/2"], ["1/2", 1]]})]:
    d2, k = small_lattice_enumerate(**kw)
    print(f"{name:26s} d2min={d2}  kissing number={k}")
