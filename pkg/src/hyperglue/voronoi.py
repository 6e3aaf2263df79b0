"""Relative Voronoi machinery: orbits, Dirichlet cells, facet types,
admissible point sets, orthogonal extension, sphere shrinking and a
Poincare pairing check for plane domains.

Cells are built with floating arithmetic; convexity questions are
decided by linear programming in the Klein model, where halfspaces are
affine constraints.  Everything is deterministic: orbit points are
ordered breadth-first by provenance word, and all LP constraints are
assembled in that order.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .qforms import DiagonalForm, direct_sum, form_from_json, form_to_json
from .hyperboloid import (
    EPS,
    HalfSpace,
    Hyperplane,
    NestingVerdict,
    are_nested,
    as_float_vector,
    basepoint,
    bilinear,
    bisector,
    boundary_sphere,
    distance,
    float_coefficients,
    is_isometry,
    isometry_inverse,
    jn_chart,
    normalize_point,
    quadratic,
    translation_along,
    translation_length,
)

_FEAS_EPS = 1e-7
_BOX_CAP = 19.0  # tanh saturates at ~19 in binary64


class UndecidableError(RuntimeError):
    """The truncated orbit cannot certify the answer; increase the cutoff."""


# -- marked hypersurface lifts -------------------------------------------------


@dataclass(frozen=True)
class MarkedGeodesic:
    """A marked geodesic lift, with a fundamental segment for sampling.

    `point` lies on the sheet, `tangent` is projected/normalized at
    construction.  In the plane the geodesic is itself a hyperplane; in
    higher dimension it is the intersection of the complement normals'
    hyperplanes.
    """

    form: DiagonalForm
    point: np.ndarray
    tangent: np.ndarray
    surface_id: int
    fundamental_length: float = 0.0

    def __post_init__(self):
        p = normalize_point(self.form, self.point)
        u = as_float_vector(self.form, self.tangent)
        u = u + bilinear(self.form, u, p) * p
        q = quadratic(self.form, u)
        if q <= EPS:
            raise ValueError("tangent must be space-like after projection")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "tangent", u / math.sqrt(q))

    def point_at(self, t: float) -> np.ndarray:
        return math.cosh(t) * self.point + math.sinh(t) * self.tangent

    def hyperplanes(self) -> tuple[Hyperplane, ...]:
        """Hyperplanes whose intersection is this geodesic."""
        form = self.form
        collected: list[np.ndarray] = []
        planes: list[Hyperplane] = []
        n = form.dimension
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            w = e + bilinear(form, e, self.point) * self.point
            w = w - bilinear(form, w, self.tangent) * self.tangent
            for prev in collected:
                w = w - (bilinear(form, w, prev) / quadratic(form, prev)) * prev
            q = quadratic(form, w)
            if q > 1e-7:
                collected.append(w)
                planes.append(Hyperplane(form, w))
        assert len(planes) == n - 2
        return tuple(planes)

    def apply(self, mat: np.ndarray) -> "MarkedGeodesic":
        return MarkedGeodesic(
            self.form,
            mat @ self.point,
            mat @ self.tangent,
            self.surface_id,
            self.fundamental_length,
        )


def _lift_hyperplanes(marked) -> tuple[Hyperplane, ...]:
    if isinstance(marked, MarkedGeodesic):
        return marked.hyperplanes()
    if isinstance(marked, Hyperplane):
        return (marked,)
    raise TypeError(f"unsupported marked lift {type(marked).__name__}")


def _surface_id(marked) -> int:
    return marked.surface_id if isinstance(marked, MarkedGeodesic) else 0


# -- group data ------------------------------------------------------------------


@dataclass
class GroupData:
    """Generators with a declared translation-length floor R.

    Every generator must verify the isometry identity.  When a horizontal
    hyperplane is declared, generators not stabilizing it must move by at
    least `r_floor` (the user-supplied surrogate for a deep finite-index
    subgroup).
    """

    form: DiagonalForm
    generators: list[np.ndarray]
    marked: list = field(default_factory=list)
    r_floor: float = 0.0
    horizontal: Hyperplane | None = None

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=float) for g in self.generators]
        for g in self.generators:
            if not is_isometry(self.form, g, tol=1e-7):
                raise ValueError("generator fails the isometry identity")
        if self.r_floor > 0:
            for g in self.generators:
                if self.horizontal is not None and _stabilizes(g, self.horizontal):
                    continue
                if translation_length(g) < self.r_floor - 1e-6:
                    raise ValueError(
                        "generator moves by less than the declared floor R"
                    )

    @property
    def gens_with_inverses(self) -> list[np.ndarray]:
        out = []
        for g in self.generators:
            out.append(g)
            out.append(isometry_inverse(self.form, g))
        return out


def _stabilizes(mat: np.ndarray, h: Hyperplane) -> bool:
    return h.apply(mat).same_as(h)


# -- orbits ----------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitPoint:
    point: np.ndarray
    word: tuple[int, ...]
    seed_index: int
    tag: int | None = None


@dataclass(frozen=True)
class OrbitSet:
    form: DiagonalForm
    points: tuple[OrbitPoint, ...]
    certification_radius: float

    def coordinates(self) -> np.ndarray:
        return np.array([op.point for op in self.points])


def build_orbit(
    seeds: Sequence,
    group: GroupData,
    word_cutoff: int,
    tags: Sequence[int] | None = None,
) -> OrbitSet:
    """Images of the seeds under all reduced words of length <= cutoff.

    Points are deduplicated at tolerance 1e-7 and ordered breadth-first
    by (seed index, provenance word).  The certification radius is
    (delta_min * cutoff - D) / 2 where delta_min is the least generator
    displacement over the seeds and D the seed-set diameter: any omitted
    orbit point provably lies at distance > 2 rho from every seed for
    groups whose displacement grows linearly in word length.
    """
    if word_cutoff < 1:
        raise ValueError("word cutoff must be at least 1")
    form = group.form
    seeds = [normalize_point(form, s) for s in seeds]
    if tags is not None and len(tags) != len(seeds):
        raise ValueError("one tag per seed required")
    gens = group.gens_with_inverses

    seen: dict[tuple, int] = {}
    points: list[OrbitPoint] = []

    def key_of(p: np.ndarray) -> tuple:
        return tuple(np.round(p, 7))

    frontier: list[OrbitPoint] = []
    for i, s in enumerate(seeds):
        op = OrbitPoint(s, (), i, tags[i] if tags is not None else None)
        seen[key_of(s)] = len(points)
        points.append(op)
        frontier.append(op)

    for _ in range(word_cutoff):
        next_frontier: list[OrbitPoint] = []
        for op in frontier:
            for gi, g in enumerate(gens):
                if op.word and (op.word[-1] ^ 1) == gi:
                    continue  # reduced words only
                y = g @ op.point
                k = key_of(y)
                if k in seen:
                    continue
                new = OrbitPoint(y, op.word + (gi,), op.seed_index, op.tag)
                seen[k] = len(points)
                points.append(new)
                next_frontier.append(new)
        frontier = next_frontier

    if not group.generators:
        radius = math.inf
    else:
        delta_min = min(
            min(distance(form, s, g @ s) for s in seeds) for g in group.generators
        )
        diameter = 0.0
        for a, b in itertools.combinations(seeds, 2):
            diameter = max(diameter, distance(form, a, b))
        radius = max(0.0, (delta_min * word_cutoff - diameter) / 2.0)
    return OrbitSet(form, tuple(points), radius)


# -- cells -----------------------------------------------------------------------


class FacetType(enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class CellFacet:
    halfspace: HalfSpace
    source_word: tuple[int, ...]
    source_point: np.ndarray
    facet_type: FacetType | None = None


@dataclass(frozen=True)
class VoronoiCell:
    """A Dirichlet cell: irredundant bounding halfspaces around a center."""

    form: DiagonalForm
    center: np.ndarray
    facets: tuple[CellFacet, ...]
    certification_radius: float

    def contains(self, x, tol: float = EPS) -> bool:
        return all(f.halfspace.contains(x, tol) for f in self.facets)

    def margins(self, x) -> np.ndarray:
        return np.array([f.halfspace.margin(x) for f in self.facets])


def _centering_isometry(form: DiagonalForm, center: np.ndarray) -> np.ndarray:
    """Isometry taking the chart basepoint to `center`."""
    b0 = basepoint(form)
    if np.allclose(b0, center, atol=EPS):
        return np.eye(form.dimension)
    d = distance(form, b0, center)
    u = (center - math.cosh(d) * b0) / math.sinh(d)
    return translation_along(form, b0, u, d)


def _klein_row(form: DiagonalForm, hs: HalfSpace, world_to_local: np.ndarray):
    """Affine Klein constraint a . k >= rhs for a halfspace, in local coordinates."""
    t, _ = jn_chart(form)
    n_local = world_to_local @ hs.hyperplane.normal
    n_chart = t @ n_local
    return hs.side * n_chart[1:], hs.side * n_chart[0]


def _klein_equality_rows(form, marked, world_to_local):
    rows = []
    t, _ = jn_chart(form)
    for h in _lift_hyperplanes(marked):
        n_chart = t @ (world_to_local @ h.normal)
        rows.append((n_chart[1:], n_chart[0]))
    return rows


def dirichlet_cell(
    center,
    orbit: OrbitSet,
    prune_radius: float | None = None,
) -> VoronoiCell:
    """Intersection of bisector halfspaces toward every other orbit point.

    Halfspaces that cannot support a facet inside the ball of radius
    `prune_radius` (default: the orbit's certification radius) around the
    center are discarded by LP feasibility in the Klein model.
    """
    form = orbit.form
    center = normalize_point(form, center)
    idx = next(
        (
            i
            for i, op in enumerate(orbit.points)
            if np.allclose(op.point, center, atol=1e-7)
        ),
        None,
    )
    if idx is None:
        raise ValueError("center must be one of the orbit points")

    raw: list[CellFacet] = []
    seen_normals: list[HalfSpace] = []
    for i, op in enumerate(orbit.points):
        if i == idx:
            continue
        h = bisector(form, center, op.point)
        hs = HalfSpace.containing(h, center)
        duplicate = any(
            hs.side == prev.side and hs.hyperplane.same_as(prev.hyperplane)
            for prev in seen_normals
        )
        if duplicate:
            continue
        seen_normals.append(hs)
        raw.append(CellFacet(hs, op.word, op.point))

    rho = prune_radius if prune_radius is not None else orbit.certification_radius
    box = math.tanh(min(rho, _BOX_CAP))

    if len(raw) <= 1:
        return VoronoiCell(form, center, tuple(raw), orbit.certification_radius)

    world_to_local = isometry_inverse(form, _centering_isometry(form, center))
    rows = [_klein_row(form, f.halfspace, world_to_local) for f in raw]
    a_all = np.array([a for a, _ in rows])
    rhs_all = np.array([r for _, r in rows])
    dim = a_all.shape[1]
    bounds = [(-box, box)] * dim

    kept: list[CellFacet] = []
    for i in range(len(raw)):
        others = [j for j in range(len(raw)) if j != i]
        res = linprog(
            c=a_all[i],
            A_ub=-a_all[others],
            b_ub=-rhs_all[others],
            bounds=bounds,
            method="highs",
        )
        if res.status != 0:
            kept.append(raw[i])  # conservative on solver trouble
            continue
        if res.fun < rhs_all[i] - _FEAS_EPS:
            kept.append(raw[i])
    return VoronoiCell(form, center, tuple(kept), orbit.certification_radius)


def classify_facets(
    cell: VoronoiCell, marked: Sequence, box_radius: float | None = None
) -> VoronoiCell:
    """Tag each facet FIRST iff it meets some marked lift, by LP feasibility.

    The test asks for a Klein point on the facet's supporting hyperplane,
    inside all other halfspaces and on every hyperplane cutting out the
    marked lift, all within the feasibility tolerance.
    """
    form = cell.form
    rho = box_radius if box_radius is not None else cell.certification_radius
    box = math.tanh(min(rho, _BOX_CAP))
    world_to_local = isometry_inverse(form, _centering_isometry(form, cell.center))
    rows = [_klein_row(form, f.halfspace, world_to_local) for f in cell.facets]
    dim = form.dimension - 1

    new_facets = []
    for i, facet in enumerate(cell.facets):
        a_i, rhs_i = rows[i]
        a_ub = [-a for j, (a, _) in enumerate(rows) if j != i]
        b_ub = [-r + _FEAS_EPS for j, (_, r) in enumerate(rows) if j != i]
        ftype = FacetType.SECOND
        for m in marked:
            eq_rows = _klein_equality_rows(form, m, world_to_local)
            a_eq = np.array([a_i] + [a for a, _ in eq_rows])
            b_eq = np.array([rhs_i] + [r for _, r in eq_rows])
            res = linprog(
                c=np.zeros(dim),
                A_ub=np.array(a_ub) if a_ub else None,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=a_eq,
                b_eq=b_eq,
                bounds=[(-box, box)] * dim,
                method="highs",
            )
            if res.status == 0:
                ftype = FacetType.FIRST
                break
        new_facets.append(replace(facet, facet_type=ftype))
    return replace(cell, facets=tuple(new_facets))


# -- admissible sets --------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleSet:
    """Finite points on the marked lifts, each tagged by its surface id."""

    points: tuple[tuple[np.ndarray, int], ...]

    def seeds_and_tags(self):
        return [p for p, _ in self.points], [t for _, t in self.points]


@dataclass(frozen=True)
class AdmissibilityVerdict:
    admissible: bool
    witness: np.ndarray | None = None
    witness_surface: int | None = None
    message: str = ""

    def __bool__(self):
        return self.admissible


def _marked_orbit(
    group: GroupData, surfaces: Sequence[MarkedGeodesic], cutoff: int
) -> list[MarkedGeodesic]:
    """Images of the marked geodesics under reduced words of length <= cutoff."""
    out: list[MarkedGeodesic] = []
    seen: set[tuple] = set()

    def push(geo: MarkedGeodesic):
        h = geo.hyperplanes()[0]
        key = (geo.surface_id,) + tuple(np.round(h.normal, 6))
        if key not in seen:
            seen.add(key)
            out.append(geo)

    for s in surfaces:
        push(s)
    frontier = list(surfaces)
    gens = group.gens_with_inverses
    for _ in range(cutoff):
        next_frontier = []
        for geo in frontier:
            for g in gens:
                img = geo.apply(g)
                before = len(out)
                push(img)
                if len(out) > before:
                    next_frontier.append(img)
        frontier = next_frontier
    return out


def surface_separations(
    group: GroupData,
    surfaces: Sequence[MarkedGeodesic],
    lift_cutoff: int = 2,
) -> dict[int, float]:
    """delta_i = min distance from surface i's lifts to all other surfaces' lifts.

    Lifts are expanded through group words up to `lift_cutoff`; geodesics
    here are plane geodesics, so distances are arccosh of the normal
    pairing.  Surfaces meeting another family give delta = 0.
    """
    form = group.form
    if form.dimension != 3:
        raise ValueError("surface separations are implemented for plane geodesics")
    lifts = _marked_orbit(group, surfaces, lift_cutoff)
    ids = sorted({s.surface_id for s in surfaces})
    out: dict[int, float] = {}
    for i in ids:
        best = math.inf
        for a in lifts:
            if a.surface_id != i:
                continue
            ha = a.hyperplanes()[0]
            for b in lifts:
                if b.surface_id == i:
                    continue
                hb = b.hyperplanes()[0]
                s = abs(bilinear(form, ha.normal, hb.normal))
                d = math.acosh(s) if s > 1.0 else 0.0
                best = min(best, d)
        out[i] = best
    return out


def build_admissible_set(
    surfaces: Sequence[MarkedGeodesic],
    group: GroupData,
    lift_cutoff: int = 2,
) -> AdmissibleSet:
    """Points along each fundamental segment at spacing <= delta_i / 2.

    Mirrors the covering construction: delta_i is the separation of
    surface i from the others, and the spacing guarantees every point of
    the surface is much closer to its own centers than to any other
    surface.
    """
    deltas = surface_separations(group, surfaces, lift_cutoff)
    for i, d in deltas.items():
        if d <= EPS and len({s.surface_id for s in surfaces}) > 1:
            raise ValueError(
                f"surface {i} touches another surface (asymptotic pairs are out of scope)"
            )
    points: list[tuple[np.ndarray, int]] = []
    for s in surfaces:
        length = s.fundamental_length
        if length <= 0:
            raise ValueError("surfaces need a positive fundamental segment")
        delta = deltas[s.surface_id]
        if math.isinf(delta):
            count = 1
        else:
            count = max(1, math.ceil(length / (delta / 2.0)))
        for j in range(count):
            points.append((s.point_at(j * length / count), s.surface_id))
    return AdmissibleSet(tuple(points))


def check_admissible(
    x_set: AdmissibleSet,
    group: GroupData,
    orbit_cutoff: int = 2,
    grid_spacing: float | None = None,
    tie_eps: float = 1e-12,
) -> AdmissibilityVerdict:
    """Decide the covering property by dense sampling of the marked lifts.

    Each surface is sampled along its fundamental segment at spacing
    min(delta)/10; the nearest truncated-orbit point must carry the same
    surface tag.  Samples outside the orbit's certification radius raise
    UndecidableError.
    """
    surfaces = [m for m in group.marked if isinstance(m, MarkedGeodesic)]
    if not surfaces:
        raise ValueError("group data carries no marked geodesics to check")
    form = group.form
    seeds, tags = x_set.seeds_and_tags()
    for p, t in x_set.points:
        geo = next((s for s in surfaces if s.surface_id == t), None)
        if geo is None:
            raise ValueError(f"point tagged with unknown surface {t}")
        if any(abs(bilinear(form, p, h.normal)) > 1e-6 for h in geo.hyperplanes()):
            raise ValueError("admissible-set point does not lie on its surface lift")

    orbit = build_orbit(seeds, group, orbit_cutoff, tags=tags)
    coords = orbit.coordinates()
    orbit_tags = np.array([op.tag for op in orbit.points])
    seed_coords = np.array(seeds)
    c = float_coefficients(form)

    if grid_spacing is None:
        if len({s.surface_id for s in surfaces}) > 1:
            deltas = surface_separations(group, surfaces, lift_cutoff=orbit_cutoff)
            grid_spacing = min(deltas.values()) / 10.0
        else:
            grid_spacing = min(s.fundamental_length for s in surfaces) / 20.0
    if not math.isfinite(grid_spacing) or grid_spacing <= 0:
        grid_spacing = min(s.fundamental_length for s in surfaces) / 20.0

    for s in surfaces:
        length = s.fundamental_length
        count = max(2, math.ceil(length / grid_spacing) + 1)
        ts = np.linspace(0.0, length, count)
        samples = (
            np.cosh(ts)[:, None] * s.point[None, :]
            + np.sinh(ts)[:, None] * s.tangent[None, :]
        )
        cosh_orbit = -(samples * c[None, :]) @ coords.T
        cosh_seeds = -(samples * c[None, :]) @ seed_coords.T
        nearest_seed = np.arccosh(np.maximum(1.0, cosh_seeds.min(axis=1)))
        if np.any(nearest_seed > orbit.certification_radius + EPS):
            raise UndecidableError(
                "sample beyond the certification radius; increase the orbit cutoff"
            )
        dists = np.arccosh(np.maximum(1.0, cosh_orbit))
        own = np.where(orbit_tags == s.surface_id, dists, np.inf).min(axis=1)
        other = np.where(orbit_tags != s.surface_id, dists, np.inf).min(axis=1)
        bad = other < own - tie_eps
        if np.any(bad):
            k = int(np.argmax(bad))
            return AdmissibilityVerdict(
                False,
                witness=samples[k],
                witness_surface=s.surface_id,
                message=(
                    f"point of surface {s.surface_id} is covered by a cell "
                    f"centred on another surface (d_own={own[k]:.6f}, "
                    f"d_other={other[k]:.6f})"
                ),
            )
    return AdmissibilityVerdict(True, message="all surfaces covered by their own cells")


# -- orthogonal extension ----------------------------------------------------------


def orthogonal_extension(cell: VoronoiCell, q) -> VoronoiCell:
    """Extend a cell of the hyperplane {last coordinate 0} to the space one dimension up.

    Every bounding normal v becomes (v, 0) in the extended form f + <q>;
    facet types are inherited unchanged, and the extended cell is the
    preimage of the original under orthogonal projection.
    """
    new_form = direct_sum(cell.form, q)
    new_center = np.append(cell.center, 0.0)
    new_facets = []
    for f in cell.facets:
        n = np.append(f.halfspace.hyperplane.normal, 0.0)
        hp = Hyperplane(new_form, n)
        hs = HalfSpace(hp, f.halfspace.side)
        new_facets.append(
            CellFacet(hs, f.source_word, np.append(f.source_point, 0.0), f.facet_type)
        )
    return VoronoiCell(
        new_form, new_center, tuple(new_facets), cell.certification_radius
    )


# -- sphere shrinking ---------------------------------------------------------------


@dataclass(frozen=True)
class ShrinkRow:
    r: float
    first_radius: float
    second_radius: float


@dataclass(frozen=True)
class ShrinkReport:
    spacing: float
    rows: tuple[ShrinkRow, ...]
    second_strictly_decreasing: bool
    first_constant: bool
    shrink_factors: tuple[float, ...]


def sphere_shrink_report(
    r_list: Sequence[float], spacing: float = 2.0
) -> ShrinkReport:
    """Radii of the boundary spheres of a vertical-plane cell as R grows.

    The demo lives in the 3-space hyperboloid: V is the vertical plane
    {x_2 = 0}, the marked geodesic runs along e_1 inside V, a fixed
    translation along it (length `spacing`) cuts the first-type walls,
    and the R-parametrized translation orthogonal to it inside V cuts the
    second-type walls.  First-type radii stay constant while second-type
    radii shrink like 1/sinh(R/2).
    """
    from .qforms import jn_form

    if not r_list:
        raise ValueError("need at least one R value")
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("R values must be strictly increasing")
    form = jn_form(3)
    x0 = basepoint(form)
    e1 = np.array([0.0, 1.0, 0.0, 0.0])
    e3 = np.array([0.0, 0.0, 0.0, 1.0])
    marked = MarkedGeodesic(form, x0, e1, surface_id=0, fundamental_length=spacing)

    rows = []
    for r in r_list:
        t_s = translation_along(form, x0, e1, spacing)
        t_r = translation_along(form, x0, e3, float(r))
        group = GroupData(form, [t_s, t_r], marked=[marked])
        orbit = build_orbit([x0], group, word_cutoff=2)
        cell = dirichlet_cell(x0, orbit, prune_radius=max(spacing, float(r)) / 2.0 + 1.0)
        cell = classify_facets(
            cell, [marked], box_radius=max(spacing, float(r)) / 2.0 + 1.0
        )
        first = [
            boundary_sphere(form, f.halfspace.hyperplane).radius
            for f in cell.facets
            if f.facet_type is FacetType.FIRST
        ]
        second = [
            boundary_sphere(form, f.halfspace.hyperplane).radius
            for f in cell.facets
            if f.facet_type is FacetType.SECOND
        ]
        if not first or not second:
            raise RuntimeError("shrink demo cell lost a facet family")
        rows.append(ShrinkRow(float(r), float(np.mean(first)), float(np.mean(second))))

    seconds = [row.second_radius for row in rows]
    firsts = [row.first_radius for row in rows]
    factors = tuple(a / b for a, b in zip(seconds, seconds[1:]))
    return ShrinkReport(
        spacing=spacing,
        rows=tuple(rows),
        second_strictly_decreasing=all(f > 1.0 for f in factors),
        first_constant=max(firsts) - min(firsts) <= 1e-9,
        shrink_factors=factors,
    )


# -- Poincare check in the plane -----------------------------------------------------


FacetRef = tuple[int, int]  # (cell index, facet index)


@dataclass(frozen=True)
class FacetPairing:
    source: FacetRef
    target: FacetRef
    isometry: np.ndarray


@dataclass(frozen=True)
class VertexCycle:
    start: tuple[int, np.ndarray]
    angle_sum: float
    order: int | None
    ok: bool


@dataclass(frozen=True)
class PoincareReport:
    passed: bool
    unpaired: tuple[FacetRef, ...]
    pairing_errors: tuple[str, ...]
    cycles: tuple[VertexCycle, ...]
    nested_pairs: tuple[tuple[FacetRef, FacetRef], ...]
    skipped_nesting: int

    def summary(self) -> str:
        lines = [f"poincare check: {'PASS' if self.passed else 'FAIL'}"]
        if self.unpaired:
            lines.append(f"  unpaired facets: {list(self.unpaired)}")
        for err in self.pairing_errors:
            lines.append(f"  pairing error: {err}")
        for cyc in self.cycles:
            lines.append(
                f"  vertex cycle at cell {cyc.start[0]}: angle sum "
                f"{cyc.angle_sum:.9f} (order {cyc.order}) "
                f"{'ok' if cyc.ok else 'BAD'}"
            )
        for a, b in self.nested_pairs:
            lines.append(f"  nested bounding hyperplanes: {a} vs {b}")
        if self.skipped_nesting:
            lines.append(
                f"  ({self.skipped_nesting} cross-cell pairs skipped: no common basepoint)"
            )
        return "\n".join(lines)


def _facet_segment(cell: VoronoiCell, facet_index: int, box: float = 0.999999):
    """Endpoints of a 2D facet in Klein coordinates (world chart).

    Returns ((k_lo, finite_lo), (k_hi, finite_hi)): each endpoint is
    either a genuine vertex (finite) or the exit point on the disk.
    """
    form = cell.form
    ident = np.eye(form.dimension)
    rows = [_klein_row(form, f.halfspace, ident) for f in cell.facets]
    a_i, rhs_i = rows[facet_index]
    norm = np.linalg.norm(a_i)
    base = a_i * rhs_i / (norm * norm)
    direction = np.array([-a_i[1], a_i[0]]) / norm

    # clip the line base + t*direction against the disk |k| <= box
    aa = float(np.dot(direction, direction))
    bb = 2.0 * float(np.dot(base, direction))
    cc = float(np.dot(base, base)) - box * box
    disc = bb * bb - 4 * aa * cc
    if disc <= 0:
        raise ValueError("facet line misses the Klein disk")
    t_lo = (-bb - math.sqrt(disc)) / (2 * aa)
    t_hi = (-bb + math.sqrt(disc)) / (2 * aa)
    lo_finite = hi_finite = False
    for j, (a_j, rhs_j) in enumerate(rows):
        if j == facet_index:
            continue
        coeff = float(np.dot(a_j, direction))
        off = float(np.dot(a_j, base)) - rhs_j
        if abs(coeff) <= 1e-12:
            continue
        t_star = -off / coeff
        if coeff > 0:
            if t_star > t_lo + 1e-12:
                t_lo, lo_finite = t_star, True
        else:
            if t_star < t_hi - 1e-12:
                t_hi, hi_finite = t_star, True
    if t_lo >= t_hi - 1e-12:
        raise ValueError("facet is empty")
    k_lo = base + t_lo * direction
    k_hi = base + t_hi * direction
    lo_finite = lo_finite and np.linalg.norm(k_lo) < box - 1e-7
    hi_finite = hi_finite and np.linalg.norm(k_hi) < box - 1e-7
    return (k_lo, lo_finite), (k_hi, hi_finite)


def _klein_project(form: DiagonalForm, x: np.ndarray) -> np.ndarray:
    t, _ = jn_chart(form)
    y = t @ x
    return y[1:] / y[0]


def _klein_lift(form: DiagonalForm, k: np.ndarray) -> np.ndarray:
    _, tinv = jn_chart(form)
    s = 1.0 - float(np.dot(k, k))
    if s <= 0:
        y = np.concatenate(([1.0], k))  # ideal point: light-cone representative
    else:
        y = np.concatenate(([1.0], k)) / math.sqrt(s)
    return tinv @ y


def _interior_angle(form, cell, i, j) -> float:
    u = cell.facets[i].halfspace.inward_normal()
    v = cell.facets[j].halfspace.inward_normal()
    c = max(-1.0, min(1.0, -bilinear(form, u, v)))
    return math.acos(c)


def check_poincare_2d(
    cells: Sequence[VoronoiCell],
    pairings: Sequence[FacetPairing],
    basepoint_hint=None,
    angle_tol: float = 1e-6,
) -> PoincareReport:
    """Poincare-style verification for a plane domain given as paired cells.

    Checks: (i) every facet paired exactly once, (ii) each pairing
    isometry carries its facet onto the partner facet, (iii) vertex
    cycles close up with angle sum 2 pi / m for integer m >= 1, and
    (iv) no two bounding hyperplanes from distinct cells are nested.
    """
    form = cells[0].form
    if form.dimension != 3:
        raise ValueError("the Poincare check runs in the hyperbolic plane")

    # (i) coverage
    counts: dict[FacetRef, int] = {}
    for ci, cell in enumerate(cells):
        for fi in range(len(cell.facets)):
            counts[(ci, fi)] = 0
    pair_map: dict[FacetRef, tuple[FacetRef, np.ndarray]] = {}
    errors: list[str] = []
    for p in pairings:
        for ref in (p.source, p.target):
            if ref not in counts:
                errors.append(f"pairing references unknown facet {ref}")
        if p.source in counts:
            counts[p.source] += 1
        if p.target in counts:
            counts[p.target] += 1
        inv = isometry_inverse(form, p.isometry)
        pair_map[p.source] = (p.target, p.isometry)
        pair_map[p.target] = (p.source, inv)
    unpaired = tuple(ref for ref, c in counts.items() if c != 1)

    # (ii) geometric pairing
    segments = {}
    for ci, cell in enumerate(cells):
        for fi in range(len(cell.facets)):
            segments[(ci, fi)] = _facet_segment(cell, fi)
    for p in pairings:
        if p.source not in counts or p.target not in counts:
            continue
        if not is_isometry(form, p.isometry, tol=1e-7):
            errors.append(f"pairing {p.source}->{p.target}: matrix is not an isometry")
            continue
        src_cell = cells[p.source[0]]
        dst_cell = cells[p.target[0]]
        src_h = src_cell.facets[p.source[1]].halfspace.hyperplane
        dst_h = dst_cell.facets[p.target[1]].halfspace.hyperplane
        if not src_h.apply(p.isometry).same_as(dst_h, tol=1e-6):
            errors.append(
                f"pairing {p.source}->{p.target}: image hyperplane does not match"
            )
            continue
        (k_lo, lo_fin), (k_hi, hi_fin) = segments[p.source]
        (m_lo, mlo_fin), (m_hi, mhi_fin) = segments[p.target]
        mapped = []
        for k, fin in ((k_lo, lo_fin), (k_hi, hi_fin)):
            x = _klein_lift(form, k)
            mapped.append((_klein_project(form, p.isometry @ x), fin))
        want = [(m_lo, mlo_fin), (m_hi, mhi_fin)]
        matched = (
            np.allclose(mapped[0][0], want[0][0], atol=1e-6)
            and np.allclose(mapped[1][0], want[1][0], atol=1e-6)
            and mapped[0][1] == want[0][1]
            and mapped[1][1] == want[1][1]
        ) or (
            np.allclose(mapped[0][0], want[1][0], atol=1e-6)
            and np.allclose(mapped[1][0], want[0][0], atol=1e-6)
            and mapped[0][1] == want[1][1]
            and mapped[1][1] == want[0][1]
        )
        if not matched:
            errors.append(
                f"pairing {p.source}->{p.target}: facet endpoints do not map onto partner"
            )

    # (iii) vertex cycles
    vertices: dict[int, list[tuple[np.ndarray, int, int]]] = {}
    for ci, cell in enumerate(cells):
        coords: list[np.ndarray] = []
        incident: list[list[int]] = []
        for fi in range(len(cell.facets)):
            (k_lo, lo_fin), (k_hi, hi_fin) = segments[(ci, fi)]
            for k, fin in ((k_lo, lo_fin), (k_hi, hi_fin)):
                if not fin:
                    continue
                slot = next(
                    (
                        s
                        for s, kk in enumerate(coords)
                        if np.linalg.norm(kk - k) <= 1e-6
                    ),
                    None,
                )
                if slot is None:
                    coords.append(k)
                    incident.append([fi])
                elif fi not in incident[slot]:
                    incident[slot].append(fi)
        vertices[ci] = [
            (coords[s], inc[0], inc[1])
            for s, inc in enumerate(incident)
            if len(inc) == 2
        ]

    def find_vertex(ci: int, k: np.ndarray) -> int | None:
        for s, (kk, _, _) in enumerate(vertices[ci]):
            if np.linalg.norm(kk - k) <= 1e-6:
                return s
        return None

    cycles: list[VertexCycle] = []
    visited: set[tuple[int, int]] = set()
    cycle_ok = True
    for ci in range(len(cells)):
        for vi in range(len(vertices[ci])):
            if (ci, vi) in visited:
                continue
            k0, fa0, fb0 = vertices[ci][vi]
            angle = 0.0
            state = (ci, vi, fb0)
            start = state
            steps = 0
            broken = False
            while True:
                c_now, v_now, f_exit = state
                visited.add((c_now, v_now))
                k_now, fa, fb = vertices[c_now][v_now]
                angle += _interior_angle(form, cells[c_now], fa, fb)
                if (c_now, f_exit) not in pair_map:
                    broken = True
                    break
                (c_next, f_in), g = pair_map[(c_now, f_exit)]
                k_next = _klein_project(form, g @ _klein_lift(form, k_now))
                v_next = find_vertex(c_next, k_next)
                if v_next is None:
                    broken = True
                    break
                _, fa2, fb2 = vertices[c_next][v_next]
                if f_in not in (fa2, fb2):
                    broken = True
                    break
                f_out = fb2 if fa2 == f_in else fa2
                state = (c_next, v_next, f_out)
                steps += 1
                if state == start or steps > 1000:
                    break
            if broken or steps > 1000:
                cycles.append(VertexCycle((ci, k0), angle, None, False))
                cycle_ok = False
                continue
            m_hat = 2.0 * math.pi / angle if angle > 0 else math.inf
            m = round(m_hat)
            ok = m >= 1 and abs(m_hat - m) <= angle_tol * max(1.0, m_hat)
            cycles.append(VertexCycle((ci, k0), angle, m if ok else None, ok))
            cycle_ok = cycle_ok and ok

    # (iv) nesting across distinct cells
    nested: list[tuple[FacetRef, FacetRef]] = []
    skipped = 0
    for (ci, cell_a), (cj, cell_b) in itertools.combinations(enumerate(cells), 2):
        if basepoint_hint is not None:
            base = np.asarray(basepoint_hint, dtype=float)
        elif np.allclose(cell_a.center, cell_b.center, atol=1e-7):
            base = cell_a.center
        else:
            base = None
        for fi, fa in enumerate(cell_a.facets):
            for fj, fb in enumerate(cell_b.facets):
                if base is None or fa.halfspace.margin(base) <= EPS or fb.halfspace.margin(
                    base
                ) <= EPS:
                    skipped += 1
                    continue
                verdict = are_nested(form, fa.halfspace, fb.halfspace, base)
                if verdict is NestingVerdict.NESTED:
                    nested.append(((ci, fi), (cj, fj)))

    passed = (
        not unpaired and not errors and cycle_ok and not nested
    )
    return PoincareReport(
        passed=passed,
        unpaired=unpaired,
        pairing_errors=tuple(errors),
        cycles=tuple(cycles),
        nested_pairs=tuple(nested),
        skipped_nesting=skipped,
    )


# -- scene serialization and cell dumps -----------------------------------------


def scene_to_json(group: GroupData, seeds: Sequence, word_cutoff: int) -> str:
    """JSON scene descriptor: form, seeds, generator matrices, marked lifts, R, cutoff."""
    form = group.form
    marked = []
    for m in group.marked:
        if isinstance(m, MarkedGeodesic):
            marked.append(
                {
                    "kind": "geodesic",
                    "point": list(m.point),
                    "tangent": list(m.tangent),
                    "surface_id": m.surface_id,
                    "fundamental_length": m.fundamental_length,
                }
            )
        elif isinstance(m, Hyperplane):
            marked.append({"kind": "hyperplane", "normal": list(m.normal)})
        else:
            raise TypeError(f"cannot serialize marked lift {type(m).__name__}")
    payload = {
        "form": json.loads(form_to_json(form)),
        "seeds": [list(np.asarray(s, dtype=float)) for s in seeds],
        "generators": [g.tolist() for g in group.generators],
        "marked": marked,
        "r_floor": group.r_floor,
        "cutoff": word_cutoff,
    }
    return json.dumps(payload, sort_keys=True)


def scene_from_json(text: str) -> tuple[GroupData, list[np.ndarray], int]:
    payload = json.loads(text)
    form = form_from_json(json.dumps(payload["form"]))
    marked = []
    for m in payload.get("marked", []):
        if m.get("kind") == "hyperplane":
            marked.append(Hyperplane(form, np.asarray(m["normal"], dtype=float)))
        else:
            marked.append(
                MarkedGeodesic(
                    form,
                    np.asarray(m["point"], dtype=float),
                    np.asarray(m["tangent"], dtype=float),
                    m["surface_id"],
                    m.get("fundamental_length", 0.0),
                )
            )
    group = GroupData(
        form,
        [np.asarray(g, dtype=float) for g in payload["generators"]],
        marked=marked,
        r_floor=payload.get("r_floor", 0.0),
    )
    seeds = [np.asarray(s, dtype=float) for s in payload["seeds"]]
    return group, seeds, int(payload["cutoff"])


def cell_facet_rows(cell: VoronoiCell) -> list[list[str]]:
    """CSV-ready rows describing a cell: one row per facet plus the center."""
    def fmt(x: float) -> str:
        return f"{float(x):.12g}"

    rows = [["center", " ".join(fmt(v) for v in cell.center), "", ""]]
    for i, f in enumerate(cell.facets):
        rows.append(
            [
                f"facet{i}",
                " ".join(fmt(v) for v in f.halfspace.hyperplane.normal),
                "".join(str(w) for w in f.source_word) or "seed",
                f.facet_type.value if f.facet_type else "",
            ]
        )
    return rows
