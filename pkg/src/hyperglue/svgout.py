"""Hand-rolled SVG emitter for ball-model figures.

Unit-disk viewBox; geodesics are drawn as circular arcs orthogonal to
the boundary circle (or as diameters).  All numbers are formatted with a
fixed precision so identical scenes produce byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def _fmt(x: float) -> str:
    out = f"{x:.6f}"
    return "0.000000" if out == "-0.000000" else out


class BallCanvas:
    """Collects SVG elements over the unit disk (y axis flipped for screen)."""

    def __init__(self, width: int = 600):
        self.width = width
        self.elements: list[str] = []

    def _pt(self, p) -> tuple[str, str]:
        return _fmt(float(p[0])), _fmt(-float(p[1]))

    def disk_boundary(self, stroke: str = "#222222", width: float = 0.012):
        self.elements.append(
            f'<circle cx="0" cy="0" r="1" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def circle(
        self,
        center,
        radius: float,
        stroke: str = "#444444",
        width: float = 0.008,
        dashed: bool = False,
    ):
        cx, cy = self._pt(center)
        dash = ' stroke-dasharray="0.03,0.02"' if dashed else ""
        self.elements.append(
            f'<circle cx="{cx}" cy="{cy}" r="{_fmt(radius)}" fill="none" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"{dash}/>'
        )

    def line(self, p, q, stroke: str = "#444444", width: float = 0.008):
        x1, y1 = self._pt(p)
        x2, y2 = self._pt(q)
        self.elements.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def dot(self, p, radius: float = 0.015, fill: str = "#000000"):
        cx, cy = self._pt(p)
        self.elements.append(
            f'<circle cx="{cx}" cy="{cy}" r="{_fmt(radius)}" fill="{fill}"/>'
        )

    def geodesic(self, sphere, stroke: str = "#444444", width: float = 0.008):
        """Draw a plane geodesic from its boundary-sphere data.

        `sphere` is a BoundarySphere in the plane: a diameter when it is
        a plane through the center, otherwise the arc of the orthogonal
        circle inside the unit disk.
        """
        if sphere.is_plane:
            n = np.asarray(sphere.center, dtype=float)
            d = np.array([-n[1], n[0]])
            self.line(d, -d, stroke=stroke, width=width)
            return
        c = np.asarray(sphere.center, dtype=float)
        r = float(sphere.radius)
        d = float(np.linalg.norm(c))
        a = (d * d + 1.0 - r * r) / (2.0 * d)
        h_sq = 1.0 - a * a
        if h_sq <= 0:
            return
        h = math.sqrt(h_sq)
        chat = c / d
        perp = np.array([-chat[1], chat[0]])
        e1 = a * chat + h * perp
        e2 = a * chat - h * perp
        # pick the branch of the circle lying inside the disk
        th1 = math.atan2(e1[1] - c[1], e1[0] - c[0])
        th2 = math.atan2(e2[1] - c[1], e2[0] - c[0])
        span = (th2 - th1) % (2.0 * math.pi)
        mid = c + r * np.array(
            [math.cos(th1 + span / 2.0), math.sin(th1 + span / 2.0)]
        )
        if np.linalg.norm(mid) > 1.0:
            th1, th2 = th2, th1
            span = (th2 - th1) % (2.0 * math.pi)
        large = 1 if span > math.pi else 0
        # svg y axis points down, so the positive-angle sweep renders as flag 0
        x1, y1 = self._pt(e1)
        x2, y2 = self._pt(e2)
        self.elements.append(
            f'<path d="M {x1} {y1} A {_fmt(r)} {_fmt(r)} 0 {large} 0 {x2} {y2}" '
            f'fill="none" stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def polyline(self, points: Sequence, stroke: str = "#444444", width: float = 0.008):
        coords = " ".join(",".join(self._pt(p)) for p in points)
        self.elements.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.width}" viewBox="-1.1 -1.1 2.2 2.2">\n'
            '<rect x="-1.1" y="-1.1" width="2.2" height="2.2" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self.elements) + "\n</svg>\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
