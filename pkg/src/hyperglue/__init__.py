"""Workbench for hyperbolic hyperplane geometry over number fields.

Subpackages: exact field arithmetic (`numfield`), diagonal quadratic
forms (`qforms`), hyperboloid-model geometry (`hyperboloid`), relative
Voronoi machinery (`voronoi`), graph-driven piece glueing (`glueing`)
and the batch CLI (`cli`).
"""

from . import glueing, hyperboloid, numfield, qforms, svgout, voronoi

__all__ = ["glueing", "hyperboloid", "numfield", "qforms", "svgout", "voronoi"]
__version__ = "0.1.0"
