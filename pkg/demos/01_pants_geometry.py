"""A pair of pants and what an observer on its boundary sees.

Builds the hyperbolic pair of pants with all three boundary lengths 2,
stands an observer on one boundary geodesic, and enumerates the other
boundary lines of the universal cover visible above an angular cutoff.
The visual angles tile the half-circle: their sum converges to pi from
below as the cutoff shrinks.
"""
import math

import numpy as np

from graphentropy import surface as sf

pants = sf.build_pants(sf.PantsParams(2.0, 2.0, 2.0))
print("boundary translation lengths:",
      [round(pants.boundary_class(k).translation_length, 12) for k in (1, 2, 3)])
print("minimum gap between boundary lines: %.6f" % sf.min_boundary_gap(pants))

for eps in (1e-2, 1e-3, 1e-4, 1e-5):
    walls = sf.enumerate_walls(pants, attach_class=1, u=0.0, l=0.0, eps=eps)
    total = sum(w.psi for w in walls)
    print("eps = %-7g  walls seen: %5d   angle sum: %.6f  (pi - %.6f)"
          % (eps, len(walls), total, math.pi - total))

# the nearest walls carry most of the angle; show the five widest
walls = sf.enumerate_walls(pants, attach_class=1, u=0.0, l=0.0, eps=1e-3)
widest = sorted(walls, key=lambda w: -w.psi)[:5]
print("\nwidest five walls (distance, visual angle, boundary class):")
for w in widest:
    print("  dist %.4f   psi %.4f   class %d" % (w.dist, w.psi, w.class_id))
