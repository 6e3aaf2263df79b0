"""Piece glueing prescribed by rooted 4-regular edge-labelled graphs.

Enumerates labelled simple 4-regular graphs (backtracking over the
upper-triangular adjacency bitmask in ascending order), decorates them
with roots and edge labels, assembles the corresponding closed piece
complexes, and measures the super-exponential growth of the counts.

Pieces are combinatorial: a template with a boundary-slot count, an
orientability bit and a configured volume weight.  Pairing isometries
are abstracted to an orientation flag per pairing.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

EDGE_LABELS = ("a+", "a-", "b+", "b-")
VERTEX_DEGREE = 4


@dataclass(frozen=True)
class PieceTemplate:
    """A glueing block: a+/a-/b+/b- blocks carry 2 boundary copies, u and v carry 4."""

    label: str
    boundary_count: int
    orientable: bool
    volume_weight: float = 1.0

    def __post_init__(self):
        if self.boundary_count not in (2, 4):
            raise ValueError("boundary count must be 2 or 4")
        if self.volume_weight <= 0:
            raise ValueError("volume weight must be positive")
        if self.label == "v" and self.orientable:
            raise ValueError("the root block v must be non-orientable")


def standard_templates(
    weights: Mapping[str, float] | None = None
) -> dict[str, PieceTemplate]:
    weights = dict(weights or {})
    out = {}
    for label in EDGE_LABELS:
        out[label] = PieceTemplate(label, 2, True, weights.get(label, 1.0))
    out["u"] = PieceTemplate("u", 4, True, weights.get("u", 1.0))
    out["v"] = PieceTemplate("v", 4, False, weights.get("v", 1.0))
    return out


@dataclass(frozen=True)
class GlueingGraph:
    """A rooted simple 4-regular graph with edges labelled a+/a-/b+/b-.

    In proper mode the four edges at every vertex carry the four distinct
    labels; free mode places no constraint.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[str, ...]
    root: int
    proper: bool = False

    def __post_init__(self):
        m = self.vertex_count
        if not (0 <= self.root < m):
            raise ValueError("root out of range")
        if len(self.labels) != len(self.edges):
            raise ValueError("one label per edge required")
        degrees = [0] * m
        seen = set()
        for (i, j), lab in zip(self.edges, self.labels):
            if not (0 <= i < j < m):
                raise ValueError("edges must be sorted pairs of distinct vertices")
            if (i, j) in seen:
                raise ValueError("multi-edge")
            seen.add((i, j))
            if lab not in EDGE_LABELS:
                raise ValueError(f"unknown edge label {lab!r}")
            degrees[i] += 1
            degrees[j] += 1
        if any(d != VERTEX_DEGREE for d in degrees):
            raise ValueError("graph is not 4-regular")
        if self.proper:
            for v in range(m):
                labs = [
                    lab
                    for (i, j), lab in zip(self.edges, self.labels)
                    if v in (i, j)
                ]
                if sorted(labs) != sorted(EDGE_LABELS):
                    raise ValueError("proper mode needs all four labels at each vertex")

    def to_json_dict(self) -> dict:
        return {
            "m": self.vertex_count,
            "edges": [list(e) for e in self.edges],
            "labels": list(self.labels),
            "root": self.root,
            "mode": "proper" if self.proper else "free",
        }


def graph_to_json(graph: GlueingGraph) -> str:
    return json.dumps(graph.to_json_dict(), sort_keys=True)


def graph_from_json(text: str) -> GlueingGraph:
    payload = json.loads(text)
    return GlueingGraph(
        payload["m"],
        tuple(tuple(e) for e in payload["edges"]),
        tuple(payload["labels"]),
        payload["root"],
        proper=payload.get("mode", "free") == "proper",
    )


def _pair_index(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def enumerate_base_graphs(m: int, degree: int = VERTEX_DEGREE) -> Iterator[tuple[tuple[int, int], ...]]:
    """All labelled simple `degree`-regular graphs on m vertices.

    Backtracks over the upper-triangular adjacency bits in pair order
    (0,1), (0,2), ..., branching 0 before 1, which yields the graphs in
    ascending bitmask order.  Residual-degree pruning keeps this
    exhaustive search feasible through m = 9.
    """
    if m <= degree:
        return
    pairs = _pair_index(m)
    total = len(pairs)
    residual = [degree] * m
    # remaining[k][v] = number of pairs at position >= k that touch v
    remaining = [[0] * m for _ in range(total + 1)]
    for k in range(total - 1, -1, -1):
        i, j = pairs[k]
        for v in range(m):
            remaining[k][v] = remaining[k + 1][v] + (1 if v in (i, j) else 0)

    chosen: list[tuple[int, int]] = []

    def feasible(k: int) -> bool:
        return all(residual[v] <= remaining[k][v] for v in range(m))

    def rec(k: int) -> Iterator[tuple[tuple[int, int], ...]]:
        if k == total:
            if all(r == 0 for r in residual):
                yield tuple(chosen)
            return
        i, j = pairs[k]
        # bit = 0
        if residual[i] <= remaining[k + 1][i] and residual[j] <= remaining[k + 1][j]:
            if feasible(k + 1):
                yield from rec(k + 1)
        # bit = 1
        if residual[i] > 0 and residual[j] > 0:
            residual[i] -= 1
            residual[j] -= 1
            chosen.append((i, j))
            if feasible(k + 1):
                yield from rec(k + 1)
            chosen.pop()
            residual[i] += 1
            residual[j] += 1

    yield from rec(0)


def proper_labelings(edges: Sequence[tuple[int, int]], m: int) -> Iterator[tuple[str, ...]]:
    """All edge labelings giving every vertex the four distinct labels.

    This is proper 4-edge-coloring of a 4-regular graph; backtracking in
    edge order with per-vertex used-label masks.
    """
    used = [set() for _ in range(m)]
    assignment: list[str] = []

    def rec(k: int) -> Iterator[tuple[str, ...]]:
        if k == len(edges):
            yield tuple(assignment)
            return
        i, j = edges[k]
        for lab in EDGE_LABELS:
            if lab in used[i] or lab in used[j]:
                continue
            used[i].add(lab)
            used[j].add(lab)
            assignment.append(lab)
            yield from rec(k + 1)
            assignment.pop()
            used[i].remove(lab)
            used[j].remove(lab)

    yield from rec(0)


def count_proper_labelings(edges: Sequence[tuple[int, int]], m: int) -> int:
    return sum(1 for _ in proper_labelings(edges, m))


def enumerate_graphs(m: int, mode: str = "free") -> Iterator[GlueingGraph]:
    """Stream of decorated graphs: every base graph, root choice and labeling.

    Free mode runs over all 4^(2m) label tuples, so consume lazily.
    Returns an empty stream (no error) below m = 5, where no simple
    4-regular graph exists.
    """
    if mode not in ("free", "proper"):
        raise ValueError("mode must be 'free' or 'proper'")
    if m < 5:
        warnings.warn("no simple 4-regular graph exists below 5 vertices")
    for edges in enumerate_base_graphs(m):
        if mode == "free":
            labelings: Iterator = itertools.product(EDGE_LABELS, repeat=len(edges))
        else:
            labelings = proper_labelings(edges, m)
        for labels in labelings:
            for root in range(m):
                yield GlueingGraph(m, edges, tuple(labels), root, proper=mode == "proper")


@dataclass(frozen=True)
class CountRow:
    m: int
    base_count: int
    rooted_labelled: int


def count_graphs(m_max: int, mode: str = "free", m_min: int = 5) -> list[CountRow]:
    """Exact counts per vertex number, with root and label multipliers.

    Free mode multiplies each base graph by m * 4^(2m); proper mode sums
    the per-graph proper 4-edge-coloring counts times m.
    """
    if mode not in ("free", "proper"):
        raise ValueError("mode must be 'free' or 'proper'")
    rows = []
    for m in range(m_min, m_max + 1):
        base = 0
        total = 0
        for edges in enumerate_base_graphs(m):
            base += 1
            if mode == "free":
                total += m * 4 ** len(edges)
            else:
                total += m * count_proper_labelings(edges, m)
        rows.append(CountRow(m, base, total))
    return rows


# -- assembly ---------------------------------------------------------------------


@dataclass(frozen=True)
class PieceInstance:
    template: PieceTemplate
    provenance: tuple

    def __str__(self):
        return f"{self.template.label}@{self.provenance}"


SlotRef = tuple[int, int]  # (piece index, slot index)


@dataclass(frozen=True)
class Pairing:
    a: SlotRef
    b: SlotRef
    flag: int = 1  # +1 orientation-compatible, -1 reversing

    def __post_init__(self):
        if self.flag not in (-1, 1):
            raise ValueError("flag must be +1 or -1")


@dataclass(frozen=True)
class AssembledManifold:
    """A closed complex of piece instances with slot pairings.

    `internal_joins` records pairs of instances that are halves of one
    connected covering block (used by orientation double covers of
    complexes containing non-orientable pieces).
    """

    pieces: tuple[PieceInstance, ...]
    pairings: tuple[Pairing, ...]
    internal_joins: tuple[tuple[int, int], ...] = ()
    deck_involution: tuple[int, ...] | None = None

    def slot_count(self) -> int:
        return sum(p.template.boundary_count for p in self.pieces)

    def is_closed(self) -> bool:
        used: set[SlotRef] = set()
        for p in self.pairings:
            for ref in (p.a, p.b):
                pi, si = ref
                if not (0 <= pi < len(self.pieces)):
                    return False
                if not (0 <= si < self.pieces[pi].template.boundary_count):
                    return False
                if ref in used:
                    return False
                used.add(ref)
        return len(used) == self.slot_count()

    def is_connected(self) -> bool:
        n = len(self.pieces)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            parent[find(x)] = find(y)

        for p in self.pairings:
            union(p.a[0], p.b[0])
        for i, j in self.internal_joins:
            union(i, j)
        return len({find(i) for i in range(n)}) <= 1


def assemble(
    graph: GlueingGraph,
    templates: Mapping[str, PieceTemplate] | None = None,
    flags: Mapping[int, int] | None = None,
) -> AssembledManifold:
    """Realize a glueing graph as a closed piece complex.

    The root vertex gets the non-orientable block v, every other vertex a
    u block, and every edge its labelled two-boundary block; each edge
    block is paired into one free slot of each endpoint block, giving 4m
    pairings in total.
    """
    templates = templates or standard_templates()
    flags = flags or {}
    m = graph.vertex_count
    pieces: list[PieceInstance] = []
    for vtx in range(m):
        lab = "v" if vtx == graph.root else "u"
        pieces.append(PieceInstance(templates[lab], ("vertex", vtx)))
    free_slots = [list(range(pieces[v].template.boundary_count)) for v in range(m)]
    pairings: list[Pairing] = []
    for k, ((i, j), lab) in enumerate(zip(graph.edges, graph.labels)):
        piece_idx = len(pieces)
        pieces.append(PieceInstance(templates[lab], ("edge", k)))
        for slot, vtx in ((0, i), (1, j)):
            if not free_slots[vtx]:
                raise RuntimeError("slot exhaustion: graph is not 4-regular")
            target = free_slots[vtx].pop(0)
            pairings.append(
                Pairing((piece_idx, slot), (vtx, target), flags.get(len(pairings), 1))
            )
    return AssembledManifold(tuple(pieces), tuple(pairings))


def volume(manifold: AssembledManifold) -> float:
    return sum(p.template.volume_weight for p in manifold.pieces)


def is_orientable(manifold: AssembledManifold) -> bool:
    """False with any non-orientable block; otherwise the orientation cocycle.

    The cocycle is trivial iff the pieces admit a +-1 signing with every
    pairing flag equal to the product of its endpoint signs (i.e. every
    cycle of the pairing graph has flag product +1).
    """
    if not manifold.is_closed():
        raise ValueError("orientability needs a closed complex")
    if any(not p.template.orientable for p in manifold.pieces):
        return False
    n = len(manifold.pieces)
    sign = [0] * n
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for p in manifold.pairings:
        adj[p.a[0]].append((p.b[0], p.flag))
        adj[p.b[0]].append((p.a[0], p.flag))
    for i, j in manifold.internal_joins:
        adj[i].append((j, 1))
        adj[j].append((i, 1))
    for start in range(n):
        if sign[start]:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            x = stack.pop()
            for y, flag in adj[x]:
                want = sign[x] * flag
                if sign[y] == 0:
                    sign[y] = want
                    stack.append(y)
                elif sign[y] != want:
                    return False
    return True


def orientation_double_cover(manifold: AssembledManifold) -> AssembledManifold:
    """Two sheets per piece, pairings lifted through the orientation cocycle.

    Reversing pairings (flag -1) connect opposite sheets and lift to
    compatible ones.  The two sheets over a non-orientable block are the
    halves of its connected orientation cover: they are recorded as
    internally joined and marked orientable.  The deck involution swaps
    the sheets of every piece and is fixed-point-free on instances.
    """
    if not manifold.is_closed():
        raise ValueError("double cover needs a closed complex")
    n = len(manifold.pieces)
    pieces: list[PieceInstance] = []
    for sheet in (0, 1):
        for p in manifold.pieces:
            template = p.template
            if not template.orientable:
                template = PieceTemplate(
                    template.label + "~",
                    template.boundary_count,
                    True,
                    template.volume_weight,
                )
            pieces.append(PieceInstance(template, ("cover",) + p.provenance + (sheet,)))

    def lift(ref: SlotRef, sheet: int) -> SlotRef:
        return (ref[0] + sheet * n, ref[1])

    pairings = []
    for p in manifold.pairings:
        cross = p.flag < 0
        for sheet in (0, 1):
            other = 1 - sheet if cross else sheet
            pairings.append(Pairing(lift(p.a, sheet), lift(p.b, other), 1))
    joins = [
        (i, i + n)
        for i, p in enumerate(manifold.pieces)
        if not p.template.orientable
    ]
    joins += [(i + n, j + n) for i, j in manifold.internal_joins]
    joins += [(i, j) for i, j in manifold.internal_joins]
    deck = tuple((i + n) % (2 * n) for i in range(2 * n))
    return AssembledManifold(tuple(pieces), tuple(pairings), tuple(joins), deck)


# -- growth --------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    c: float
    intercept: float
    residuals: dict[int, float]

    @property
    def degenerate(self) -> bool:
        return abs(self.c) < 1e-6


def growth_fit(counts: Mapping[int, int]) -> GrowthFit:
    """Least-squares fit of log(count) against m*log(m).

    Counts growing like m^(c m) produce slope c; constant counts are
    flagged degenerate through c ~ 0.
    """
    if len(counts) < 3:
        raise ValueError("growth fit needs at least three rows")
    ms = sorted(counts)
    x = np.array([m * math.log(m) for m in ms])
    y = np.array([math.log(counts[m]) for m in ms])
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    residuals = {
        m: float(y[i] - (slope * x[i] + intercept)) for i, m in enumerate(ms)
    }
    return GrowthFit(float(slope), float(intercept), residuals)
