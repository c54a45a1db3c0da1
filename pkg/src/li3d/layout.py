"""Layout data model: dialects, labeled boxes, validation, normalization, relation graphs.

A layout is an ordered list of axis-aligned boxes, each carrying a free-text
description, plus a whole-scene description.  Three dialects share the model:
3D scenes, 3D object parts, and 2D images.  All types are immutable values and
all operations are pure functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class Dialect(Enum):
    SCENE3D = "scene3d"
    OBJECT_PARTS3D = "object_parts3d"
    IMAGE2D = "image2d"

    @property
    def dims(self) -> int:
        return 2 if self is Dialect.IMAGE2D else 3

    @property
    def keys(self) -> tuple[str, str, str]:
        """The (descriptions, centers, scales) key names of the text form."""
        return _DIALECT_KEYS[self]


_DIALECT_KEYS = {
    Dialect.SCENE3D: ("object_description", "object_center_point", "object_box_scales"),
    Dialect.OBJECT_PARTS3D: ("part_description", "part_center_point", "part_box_scales"),
    Dialect.IMAGE2D: ("object_description", "object_center_point", "object_scale"),
}

DESCRIPTION_KEY = "description"

#: minimum width/height of a 2D box
MIN_SCALE_2D = 0.2

#: default tolerance below which coordinates count as tied (no relation edge)
DEFAULT_EPS_REL = 1e-6

#: normalization target for 3D box boundaries
NORMALIZE_BOUND = 0.8

# Slack on the in-range test so that normalize is exactly idempotent: the
# rescaled boundary lands within a few ulps of the target, and a second pass
# must not rescale again.
_NORMALIZE_SLACK = 1e-12


class UnsupportedDialect(Exception):
    """Operation does not apply to the layout's dialect."""


@dataclass(frozen=True)
class BoxObject:
    """One labeled axis-aligned box.

    ``scale`` holds full edge lengths; the boundary on axis ``i`` is
    ``center[i] +/- scale[i] / 2``.
    """

    description: str
    center: tuple[float, ...]
    scale: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        if len(self.center) not in (2, 3):
            raise ValueError(f"center must have 2 or 3 components, got {len(self.center)}")
        if len(self.center) != len(self.scale):
            raise ValueError(
                f"center has {len(self.center)} components but scale has {len(self.scale)}"
            )
        for v in self.center + self.scale:
            if not math.isfinite(v):
                raise ValueError("box coordinates must be finite")

    @property
    def dims(self) -> int:
        return len(self.center)

    def interval(self, axis: int) -> tuple[float, float]:
        """The [low, high] extent of the box on one axis."""
        half = self.scale[axis] / 2.0
        return self.center[axis] - half, self.center[axis] + half


@dataclass(frozen=True)
class Layout:
    """An ordered set of boxes plus a whole-scene/object description."""

    dialect: Dialect
    objects: tuple[BoxObject, ...]
    description: str

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        for i, obj in enumerate(self.objects):
            if obj.dims != self.dialect.dims:
                raise ValueError(
                    f"object {i} has {obj.dims} dimensions, dialect wants {self.dialect.dims}"
                )

    def __len__(self) -> int:
        return len(self.objects)


def empty_layout(dialect: Dialect, description: str = "") -> Layout:
    return Layout(dialect, (), description)


# --- validation -------------------------------------------------------------

RANGE = "range"
OVERLAP = "overlap"
MIN_SIZE = "min_size"
EMPTY_DESCRIPTION = "empty_description"

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    kind: str
    severity: str
    message: str
    objects: tuple[int, ...] = ()
    axis: int | None = None


def validate(layout: Layout) -> list[Violation]:
    """Report every rule violated by the layout.

    Total function: an empty result means the layout is valid.  Overlap is a
    warning (generated layouts routinely touch or overlap); everything else is
    an error.
    """
    out: list[Violation] = []
    is_2d = layout.dialect is Dialect.IMAGE2D
    lo, hi = (0.0, 1.0) if is_2d else (-1.0, 1.0)

    for i, obj in enumerate(layout.objects):
        if not obj.description.strip():
            out.append(
                Violation(EMPTY_DESCRIPTION, ERROR, f"object {i} has an empty description", (i,))
            )
        for axis in range(obj.dims):
            c, s = obj.center[axis], obj.scale[axis]
            if not lo <= c <= hi:
                out.append(
                    Violation(
                        RANGE, ERROR,
                        f"object {i} center[{axis}]={c:g} outside [{lo:g}, {hi:g}]",
                        (i,), axis,
                    )
                )
            if not lo <= s <= hi:
                out.append(
                    Violation(
                        RANGE, ERROR,
                        f"object {i} scale[{axis}]={s:g} outside [{lo:g}, {hi:g}]",
                        (i,), axis,
                    )
                )
            if not is_2d and s <= 0.0:
                out.append(
                    Violation(
                        RANGE, ERROR,
                        f"object {i} scale[{axis}]={s:g} must be positive",
                        (i,), axis,
                    )
                )
            if is_2d and s < MIN_SCALE_2D:
                out.append(
                    Violation(
                        MIN_SIZE, ERROR,
                        f"object {i} scale[{axis}]={s:g} below the 2D minimum {MIN_SCALE_2D}",
                        (i,), axis,
                    )
                )

    for i in range(len(layout.objects)):
        for j in range(i + 1, len(layout.objects)):
            if _boxes_overlap(layout.objects[i], layout.objects[j]):
                out.append(
                    Violation(
                        OVERLAP, WARNING,
                        f"objects {i} and {j} overlap",
                        (i, j),
                    )
                )
    return out


def _boxes_overlap(a: BoxObject, b: BoxObject) -> bool:
    # Positive intersection required on every axis; touching is not overlap.
    for axis in range(a.dims):
        a_lo, a_hi = a.interval(axis)
        b_lo, b_hi = b.interval(axis)
        if min(a_hi, b_hi) - max(a_lo, b_lo) <= 0.0:
            return False
    return a.dims > 0


def error_violations(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == ERROR]


# --- normalization ----------------------------------------------------------


def max_boundary(layout: Layout) -> float:
    """Largest |center +/- scale/2| over all objects and axes; 0 when empty."""
    best = 0.0
    for obj in layout.objects:
        for axis in range(obj.dims):
            lo, hi = obj.interval(axis)
            best = max(best, abs(lo), abs(hi))
    return best


def normalize(layout: Layout) -> Layout:
    """Rescale a 3D layout so every box boundary fits in [-0.8, 0.8].

    Layouts already within the bound are returned unchanged (the same object),
    which makes the operation exactly idempotent.
    """
    if layout.dialect is Dialect.IMAGE2D:
        raise UnsupportedDialect("normalize applies to 3D layouts only")
    bound = max_boundary(layout)
    if bound <= NORMALIZE_BOUND + _NORMALIZE_SLACK:
        return layout
    factor = NORMALIZE_BOUND / bound
    objects = tuple(
        BoxObject(
            obj.description,
            tuple(c * factor for c in obj.center),
            tuple(s * factor for s in obj.scale),
        )
        for obj in layout.objects
    )
    return Layout(layout.dialect, objects, layout.description)


# --- relation graph ---------------------------------------------------------


class Relation(Enum):
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    BEHIND = "behind"
    IN_FRONT_OF = "in_front_of"


_INVERSE = {
    Relation.LEFT_OF: Relation.RIGHT_OF,
    Relation.RIGHT_OF: Relation.LEFT_OF,
    Relation.BEHIND: Relation.IN_FRONT_OF,
    Relation.IN_FRONT_OF: Relation.BEHIND,
}

NodeId = tuple[int, str]
Edge = tuple[NodeId, Relation, NodeId]


@dataclass(frozen=True)
class RelationGraph:
    nodes: tuple[NodeId, ...]
    edges: frozenset[Edge]


def relation_edges_from_positions(
    positions: Sequence[tuple[float, float]], eps_rel: float = DEFAULT_EPS_REL
) -> set[tuple[int, Relation, int]]:
    """Directed left-right / front-back edges over (x, z) positions.

    Smaller x is left; smaller z is behind.  Pairs whose coordinates differ by
    at most ``eps_rel`` on an axis get no edge for that axis.
    """
    edges: set[tuple[int, Relation, int]] = set()
    n = len(positions)
    for i in range(n):
        xi, zi = positions[i]
        for j in range(i + 1, n):
            xj, zj = positions[j]
            if xi < xj - eps_rel:
                edges.add((i, Relation.LEFT_OF, j))
                edges.add((j, Relation.RIGHT_OF, i))
            elif xj < xi - eps_rel:
                edges.add((j, Relation.LEFT_OF, i))
                edges.add((i, Relation.RIGHT_OF, j))
            if zi < zj - eps_rel:
                edges.add((i, Relation.BEHIND, j))
                edges.add((j, Relation.IN_FRONT_OF, i))
            elif zj < zi - eps_rel:
                edges.add((j, Relation.BEHIND, i))
                edges.add((i, Relation.IN_FRONT_OF, j))
    return edges


def relation_graph(layout: Layout, eps_rel: float = DEFAULT_EPS_REL) -> RelationGraph:
    """Left-right (x axis) and front-back (z axis) relations between objects."""
    if layout.dialect is Dialect.IMAGE2D:
        raise UnsupportedDialect("relation graphs are defined for 3D layouts")
    nodes = tuple((i, obj.description) for i, obj in enumerate(layout.objects))
    positions = [(obj.center[0], obj.center[2]) for obj in layout.objects]
    edges = frozenset(
        (nodes[i], rel, nodes[j])
        for (i, rel, j) in relation_edges_from_positions(positions, eps_rel)
    )
    return RelationGraph(nodes, edges)


def inverse_relation(rel: Relation) -> Relation:
    return _INVERSE[rel]


# --- JSON form (shared by sessions, directives, and dataset files) ----------


def layout_to_json(layout: Layout) -> dict:
    return {
        "dialect": layout.dialect.value,
        "description": layout.description,
        "objects": [
            {"description": o.description, "center": list(o.center), "scale": list(o.scale)}
            for o in layout.objects
        ],
    }


def layout_from_json(data: dict) -> Layout:
    dialect = Dialect(data["dialect"])
    objects = tuple(
        BoxObject(o["description"], tuple(o["center"]), tuple(o["scale"]))
        for o in data["objects"]
    )
    return Layout(dialect, objects, data["description"])
