"""
Drawing the optimized sections
==============================

Decoded designs are ordinary NACA 4-digit parameters, so the result of an
optimization can be written straight out as Selig-format coordinates.
"""
from qubofoil.geometry import AirfoilParams, max_thickness, naca4_coordinates

for i, (a, b, t) in enumerate([(0, 4, 12), (2, 4, 12), (6, 4, 10.06)]):
    params = AirfoilParams(a, b, t)
    coords = naca4_coordinates(params, points_per_surface=120)
    print(f"{params.name:>16}: max thickness {max_thickness(coords):.4f} chord")
    coords.write_selig(f"section_{i}.dat")
