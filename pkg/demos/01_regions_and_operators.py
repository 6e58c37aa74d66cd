"""Regions, hedges, and axis expansion, step by step.

Builds the quickness world: a 2D "fast" surface over (distance, time), the
derived quickness axis, and the familiar operators not / very, then maps
1D concepts back onto the reference surface.  Writes P2 graymaps next to
this script so you can look at every region it talks about.
"""

import pathlib

import numpy as np

from meaningspace import (
    Axis, Context, Region, apply_hedge, apply_not, empty_region, evaluate,
    expand_axis, grid_from_function, membership, write_pgm,
)
from meaningspace.regions import Point, nodes

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def show(title, lines=()):
    print(f"\n== {title}")
    for line in lines:
        print("  " + line)


# A context is a coordinate system of property axes; knowledge is a fuzzy
# region in its unit hypercube.
s = Axis("rel_distance", name="relative distance")
t = Axis("rel_time", name="relative time")
st = Context("st", (s, t))

fast_surface = grid_from_function(
    lambda u, v: np.clip((u - v + 1.0) / 2.0, 0.0, 1.0),
    ("rel_distance", "rel_time"))
fast_st = Region(st, ((fast_surface, 1.0),), label="fast")
write_pgm(fast_surface.values, OUT / "fast_st.pgm", "fast over (s, t)")
show("concept 'fast' over (distance, time)",
     [f"membership at far-and-quick (s=1, t=0): "
      f"{membership(fast_st, Point(st, {'rel_distance': 1, 'rel_time': 0})):.2f}",
      f"membership at slow crawl (s=0, t=1):  "
      f"{membership(fast_st, Point(st, {'rel_distance': 0, 'rel_time': 1})):.2f}",
      f"graymap: {OUT / 'fast_st.pgm'}"])

# The membership values of "fast" define a derived axis: quickness.
q = Axis("quickness", kind="derived", reference=fast_st)
qspace = Context("quickness-space", (q,))
fast_q = Region(qspace, ((grid_from_function(lambda x: x, ("quickness",)), 1.0),),
                label="fast")

# Hedges are pointwise operators on membership samples.
slow_q = apply_not(fast_q)
very_fast_q = apply_hedge("very", fast_q)
xs = nodes(64)
show("operators on the quickness axis",
     [f"fast(0.7)      = {fast_q.factors[0][0].sample_point([0.7]):.3f}",
      f"slow(0.7)      = {slow_q.factors[0][0].sample_point([0.7]):.3f}   (not = 1 - x)",
      f"very fast(0.7) = {very_fast_q.factors[0][0].sample_point([0.7]):.3f}   (very = x^2)"])

# Axis expansion writes a quickness concept back in (distance, time) terms
# by composing with the reference region.
back = expand_axis(slow_q, "quickness")
_, vals = evaluate(back, axes=["rel_distance", "rel_time"])
write_pgm(vals, OUT / "slow_st.pgm", "slow = not(fast) over (s, t)")
show("axis expansion: slow = not(fast) in the reference context",
     [f"value at (s=1, t=0): {vals[-1, 0]:.2f}  (fast corner turns dark)",
      f"value at (s=0, t=1): {vals[0, -1]:.2f}  (slow corner lights up)",
      f"graymap: {OUT / 'slow_st.pgm'}"])

# Regions over several axes are factor products; unspecified axes read 1.
w = Axis("weight")
qw = Context("qw", (q, w))
fast_and_heavy = Region(qw, (
    (grid_from_function(lambda x: x, ("quickness",)), 0.5),
    (grid_from_function(lambda x: x, ("weight",)), 0.5)), "fast-and-heavy")
p = Point(qw, {"quickness": 0.81, "weight": 0.25})
show("factored multi-axis region (geometric mean semantics)",
     [f"sqrt(0.81 * 0.25) = {membership(fast_and_heavy, p):.3f}",
      f"empty region reads 1 everywhere: "
      f"{membership(empty_region(qw), p):.1f}"])
