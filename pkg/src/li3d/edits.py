"""Diff consecutive layouts into typed edit plans and compile backend directives.

Object descriptions act as identities.  Duplicated descriptions are matched by
minimal total center distance; attribute edits pair an old and a new
description over an identical box.  Plans replay: ``apply(prev, diff(prev,
next)) == next`` exactly, including object order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from enum import Enum

from .layout import BoxObject, Dialect, Layout, layout_from_json, layout_to_json


class OpKind(Enum):
    ADD = "add"
    REMOVE = "remove"
    MOVE = "move"
    RESIZE = "resize"
    ATTRIBUTE_EDIT = "attribute_edit"
    FULL_REGENERATE = "full_regenerate"


class DialectMismatch(Exception):
    pass


class UnresolvedTarget(Exception):
    pass


@dataclass(frozen=True)
class EditOp:
    kind: OpKind
    description: str = ""
    prev_index: int | None = None
    next_index: int | None = None
    box: BoxObject | None = None
    old_center: tuple[float, ...] | None = None
    new_center: tuple[float, ...] | None = None
    old_scale: tuple[float, ...] | None = None
    new_scale: tuple[float, ...] | None = None
    new_description: str | None = None
    layout: Layout | None = None


# Fixed compilation order: removals free regions before anything pastes into them.
_OP_ORDER = {
    OpKind.REMOVE: 0,
    OpKind.ATTRIBUTE_EDIT: 1,
    OpKind.MOVE: 2,
    OpKind.RESIZE: 3,
    OpKind.ADD: 4,
    OpKind.FULL_REGENERATE: 5,
}


@dataclass(frozen=True)
class BackendDirective:
    action: str
    params: dict

    def __post_init__(self):
        iters = self.params.get("iterations")
        if iters is not None and iters <= 0:
            raise ValueError("iteration counts must be positive")
        dilate = self.params.get("dilate_px")
        if dilate is not None and dilate < 0:
            raise ValueError("dilation must be non-negative")


TRAIN_SCRATCH = "train_scratch"
TRAIN_LOCAL = "train_local"
JOINT_FINETUNE = "joint_finetune"
TRANSFORM_EDIT = "transform_edit"
FINETUNE_OBJECT = "finetune_object"
MASK_EXTRACT = "mask_extract"
INPAINT = "inpaint"
PASTE = "paste"


@dataclass(frozen=True)
class EditConfig:
    """Backend parameters; defaults follow the reference training recipe."""

    train_scratch_iters: int = 8000
    train_local_iters: int = 3000
    joint_finetune_iters: int = 6000
    finetune_object_iters: int = 6000
    mask_dilate_px: int = 10
    mask_score_rank: int = 2
    loss_weight: float = 100.0
    learning_rate: float = 0.0001
    full_regenerate_threshold: float = 0.5
    match_eps: float = 1e-9
    scale_full_extent: bool = True


DEFAULT_CONFIG = EditConfig()


@dataclass(frozen=True)
class EditPlan:
    dialect: Dialect
    ops: tuple[EditOp, ...]
    matches: tuple[tuple[int, int], ...]
    next_description: str
    directives: tuple[BackendDirective, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.ops

    def with_directives(self, directives) -> "EditPlan":
        return replace(self, directives=tuple(directives))


def identity_plan(layout: Layout) -> EditPlan:
    """The no-op plan: apply(layout, identity_plan(layout)) == layout."""
    matches = tuple((i, i) for i in range(len(layout.objects)))
    return EditPlan(layout.dialect, (), matches, layout.description)


# --- matching ---------------------------------------------------------------


def _distance(a: BoxObject, b: BoxObject) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.center, b.center)))


def _min_cost_pairs(
    prev_idx: list[int], next_idx: list[int], prev: Layout, next: Layout
) -> list[tuple[int, int]]:
    """Assign duplicates minimizing total center distance.

    Ties break toward earlier next indices (first minimal assignment found).
    Exhaustive for small groups; bitmask DP above that.
    """
    k = min(len(prev_idx), len(next_idx))
    if k == 0:
        return []
    if k == 1 and len(prev_idx) == 1 and len(next_idx) == 1:
        return [(prev_idx[0], next_idx[0])]
    cost = {
        (i, j): _distance(prev.objects[i], next.objects[j])
        for i in prev_idx
        for j in next_idx
    }
    if max(len(prev_idx), len(next_idx)) <= 7:
        if len(prev_idx) <= len(next_idx):
            best, best_cost = None, math.inf
            for perm in itertools.permutations(next_idx, k):
                c = sum(cost[(i, j)] for i, j in zip(prev_idx, perm))
                if c < best_cost:
                    best, best_cost = perm, c
            return list(zip(prev_idx, best))
        best, best_cost = None, math.inf
        for perm in itertools.permutations(prev_idx, k):
            c = sum(cost[(i, j)] for i, j in zip(perm, next_idx))
            if c < best_cost:
                best, best_cost = perm, c
        return sorted(zip(best, next_idx))
    return _assignment_dp(prev_idx, next_idx, cost)


def _assignment_dp(prev_idx, next_idx, cost) -> list[tuple[int, int]]:
    # dp over subsets of the larger side, assigning the smaller side in order
    small, large, flip = (
        (prev_idx, next_idx, False)
        if len(prev_idx) <= len(next_idx)
        else (next_idx, prev_idx, True)
    )
    if len(large) > 20:
        return _greedy_pairs(prev_idx, next_idx, cost)
    n = len(large)
    full = 1 << n
    dp = [math.inf] * full
    dp[0] = 0.0
    choice: dict[int, int] = {}
    order = sorted(range(full), key=lambda m: bin(m).count("1"))
    for mask in order:
        r = bin(mask).count("1")
        if r >= len(small) or math.isinf(dp[mask]):
            continue
        s = small[r]
        for b in range(n):
            if mask & (1 << b):
                continue
            c = dp[mask] + (cost[(s, large[b])] if not flip else cost[(large[b], s)])
            nxt = mask | (1 << b)
            if c < dp[nxt]:
                dp[nxt] = c
                choice[nxt] = b
    best_mask, best = None, math.inf
    for mask in range(full):
        if bin(mask).count("1") == len(small) and dp[mask] < best:
            best_mask, best = mask, dp[mask]
    pairs = []
    mask = best_mask
    for r in range(len(small) - 1, -1, -1):
        b = choice[mask]
        pairs.append((small[r], large[b]) if not flip else (large[b], small[r]))
        mask &= ~(1 << b)
    return sorted(pairs)


def _greedy_pairs(prev_idx, next_idx, cost) -> list[tuple[int, int]]:
    remaining = set(next_idx)
    pairs = []
    for i in prev_idx:
        if not remaining:
            break
        j = min(remaining, key=lambda jj: (cost[(i, jj)], jj))
        remaining.discard(j)
        pairs.append((i, j))
    return pairs


def _boxes_equal(a: BoxObject, b: BoxObject, eps: float) -> bool:
    return all(abs(x - y) <= eps for x, y in zip(a.center, b.center)) and all(
        abs(x - y) <= eps for x, y in zip(a.scale, b.scale)
    )


# --- diff / apply -----------------------------------------------------------


def diff(prev: Layout, next: Layout, config: EditConfig = DEFAULT_CONFIG) -> EditPlan:
    """Derive the typed edit plan that turns ``prev`` into ``next``."""
    if prev.dialect is not next.dialect:
        raise DialectMismatch(f"{prev.dialect.value} vs {next.dialect.value}")

    prev_by_desc: dict[str, list[int]] = {}
    next_by_desc: dict[str, list[int]] = {}
    for i, obj in enumerate(prev.objects):
        prev_by_desc.setdefault(obj.description, []).append(i)
    for j, obj in enumerate(next.objects):
        next_by_desc.setdefault(obj.description, []).append(j)

    matches: list[tuple[int, int]] = []
    for desc in prev_by_desc:
        if desc in next_by_desc:
            matches.extend(_min_cost_pairs(prev_by_desc[desc], next_by_desc[desc], prev, next))

    matched_prev = {i for i, _ in matches}
    matched_next = {j for _, j in matches}
    unmatched_prev = [i for i in range(len(prev.objects)) if i not in matched_prev]
    unmatched_next = [j for j in range(len(next.objects)) if j not in matched_next]

    attribute_pairs: list[tuple[int, int]] = []
    taken_next: set[int] = set()
    for i in unmatched_prev:
        for j in unmatched_next:
            if j in taken_next:
                continue
            if _boxes_equal(prev.objects[i], next.objects[j], config.match_eps):
                attribute_pairs.append((i, j))
                taken_next.add(j)
                break
    attr_prev = {i for i, _ in attribute_pairs}
    removes = [i for i in unmatched_prev if i not in attr_prev]
    adds = [j for j in unmatched_next if j not in taken_next]

    total = len(prev.objects) + len(next.objects)
    if (
        prev.objects
        and next.objects
        and len(removes) + len(adds) > config.full_regenerate_threshold * total
    ):
        op = EditOp(OpKind.FULL_REGENERATE, layout=next)
        return EditPlan(prev.dialect, (op,), (), next.description)

    ops: list[EditOp] = []
    for i in sorted(removes):
        ops.append(EditOp(OpKind.REMOVE, prev.objects[i].description, prev_index=i))
    for i, j in sorted(attribute_pairs):
        ops.append(
            EditOp(
                OpKind.ATTRIBUTE_EDIT,
                prev.objects[i].description,
                prev_index=i,
                next_index=j,
                new_description=next.objects[j].description,
            )
        )
    moves: list[EditOp] = []
    resizes: list[EditOp] = []
    for i, j in sorted(matches):
        a, b = prev.objects[i], next.objects[j]
        if any(abs(x - y) > config.match_eps for x, y in zip(a.center, b.center)):
            moves.append(
                EditOp(
                    OpKind.MOVE, a.description, prev_index=i, next_index=j,
                    old_center=a.center, new_center=b.center,
                )
            )
        if any(abs(x - y) > config.match_eps for x, y in zip(a.scale, b.scale)):
            resizes.append(
                EditOp(
                    OpKind.RESIZE, a.description, prev_index=i, next_index=j,
                    old_scale=a.scale, new_scale=b.scale,
                )
            )
    ops.extend(moves)
    ops.extend(resizes)
    for j in sorted(adds):
        ops.append(
            EditOp(
                OpKind.ADD, next.objects[j].description, next_index=j, box=next.objects[j]
            )
        )

    all_matches = tuple(sorted(matches + attribute_pairs))
    return EditPlan(prev.dialect, tuple(ops), all_matches, next.description)


def apply(prev: Layout, plan: EditPlan) -> Layout:
    """Deterministically apply a plan; inverse of diff by construction."""
    if prev.dialect is not plan.dialect:
        raise DialectMismatch(f"{prev.dialect.value} vs {plan.dialect.value}")
    for op in plan.ops:
        if op.kind is OpKind.FULL_REGENERATE:
            if op.layout is None:
                raise UnresolvedTarget("full regenerate without a target layout")
            return op.layout

    matched_prev = {i for i, _ in plan.matches}
    adds = [op for op in plan.ops if op.kind is OpKind.ADD]
    removes = {op.prev_index for op in plan.ops if op.kind is OpKind.REMOVE}

    for i in range(len(prev.objects)):
        if i not in matched_prev and i not in removes:
            raise UnresolvedTarget(f"previous object {i} is neither matched nor removed")
    n_next = len(plan.matches) + len(adds)
    slots: list[BoxObject | None] = [None] * n_next

    by_prev: dict[int, list[EditOp]] = {}
    for op in plan.ops:
        if op.kind in (OpKind.MOVE, OpKind.RESIZE, OpKind.ATTRIBUTE_EDIT):
            by_prev.setdefault(op.prev_index, []).append(op)

    for i, j in plan.matches:
        if not (0 <= i < len(prev.objects)) or not (0 <= j < n_next) or slots[j] is not None:
            raise UnresolvedTarget(f"bad match ({i}, {j})")
        obj = prev.objects[i]
        description, center, scale = obj.description, obj.center, obj.scale
        for op in by_prev.get(i, ()):
            if op.description != obj.description:
                raise UnresolvedTarget(
                    f"op targets '{op.description}' but object {i} is '{obj.description}'"
                )
            if op.kind is OpKind.MOVE:
                center = op.new_center
            elif op.kind is OpKind.RESIZE:
                scale = op.new_scale
            else:
                description = op.new_description
        slots[j] = BoxObject(description, center, scale)

    for op in adds:
        j = op.next_index
        if op.box is None or j is None or not (0 <= j < n_next) or slots[j] is not None:
            raise UnresolvedTarget(f"bad add at index {j}")
        slots[j] = op.box

    if any(s is None for s in slots):
        raise UnresolvedTarget("plan does not cover every output position")
    return Layout(prev.dialect, tuple(slots), plan.next_description)


# --- directive compilation ---------------------------------------------------


def compile_directives(
    plan: EditPlan, is_initial: bool = False, config: EditConfig = DEFAULT_CONFIG
) -> tuple[BackendDirective, ...]:
    """Map a plan onto backend actions with the configured training budgets."""
    if is_initial or any(op.kind is OpKind.FULL_REGENERATE for op in plan.ops):
        return (BackendDirective(TRAIN_SCRATCH, {"iterations": config.train_scratch_iters}),)
    ordered = sorted(plan.ops, key=lambda op: (_OP_ORDER[op.kind], op.prev_index or 0))
    if plan.dialect is Dialect.IMAGE2D:
        return tuple(_compile_2d(ordered, config))
    return tuple(_compile_3d(ordered, config))


def _target(op: EditOp) -> dict:
    return {"description": op.description, "prev_index": op.prev_index}


def _compile_3d(ops, config):
    out = []
    any_add = False
    for op in ops:
        if op.kind is OpKind.REMOVE:
            out.append(BackendDirective(TRANSFORM_EDIT, {"mode": "drop", **_target(op)}))
        elif op.kind is OpKind.ATTRIBUTE_EDIT:
            out.append(
                BackendDirective(
                    FINETUNE_OBJECT,
                    {
                        "iterations": config.finetune_object_iters,
                        "new_description": op.new_description,
                        **_target(op),
                    },
                )
            )
        elif op.kind is OpKind.MOVE:
            translation = tuple(n - o for n, o in zip(op.new_center, op.old_center))
            out.append(
                BackendDirective(
                    TRANSFORM_EDIT,
                    {"mode": "translate", "translation": list(translation), **_target(op)},
                )
            )
        elif op.kind is OpKind.RESIZE:
            out.append(
                BackendDirective(
                    TRANSFORM_EDIT,
                    {
                        "mode": "scale",
                        "old_scale": list(op.old_scale),
                        "new_scale": list(op.new_scale),
                        **_target(op),
                    },
                )
            )
        elif op.kind is OpKind.ADD:
            any_add = True
            out.append(
                BackendDirective(
                    TRAIN_LOCAL,
                    {
                        "iterations": config.train_local_iters,
                        "description": op.description,
                        "next_index": op.next_index,
                    },
                )
            )
    if any_add:
        out.append(BackendDirective(JOINT_FINETUNE, {"iterations": config.joint_finetune_iters}))
    return out


def _mask_extract(config, source, op):
    return BackendDirective(
        MASK_EXTRACT,
        {
            "source": source,
            "score_rank": config.mask_score_rank,
            "dilate_px": config.mask_dilate_px,
            **_target(op),
        },
    )


def _compile_2d(ops, config):
    out = []
    for op in ops:
        if op.kind is OpKind.REMOVE:
            out.append(_mask_extract(config, "current_image", op))
            out.append(BackendDirective(INPAINT, _target(op)))
        elif op.kind is OpKind.ADD:
            out.append(_mask_extract(config, "regenerated_image", op))
            out.append(
                BackendDirective(
                    PASTE,
                    {"description": op.description, "box": _box_json(op.box)},
                )
            )
        elif op.kind in (OpKind.MOVE, OpKind.RESIZE, OpKind.ATTRIBUTE_EDIT):
            out.append(_mask_extract(config, "current_image", op))
            out.append(BackendDirective(INPAINT, _target(op)))
            params = {"description": op.new_description or op.description}
            if op.kind is OpKind.MOVE:
                params["new_center"] = list(op.new_center)
            elif op.kind is OpKind.RESIZE:
                params["new_scale"] = list(op.new_scale)
            out.append(BackendDirective(PASTE, params))
    return out


# --- JSON form ---------------------------------------------------------------


def _box_json(box: BoxObject | None):
    if box is None:
        return None
    return {"description": box.description, "center": list(box.center), "scale": list(box.scale)}


def _box_from_json(data):
    if data is None:
        return None
    return BoxObject(data["description"], tuple(data["center"]), tuple(data["scale"]))


def op_to_json(op: EditOp) -> dict:
    out: dict = {"kind": op.kind.value, "description": op.description}
    for name in ("prev_index", "next_index", "new_description"):
        value = getattr(op, name)
        if value is not None:
            out[name] = value
    for name in ("old_center", "new_center", "old_scale", "new_scale"):
        value = getattr(op, name)
        if value is not None:
            out[name] = list(value)
    if op.box is not None:
        out["box"] = _box_json(op.box)
    if op.layout is not None:
        out["layout"] = layout_to_json(op.layout)
    return out


def op_from_json(data: dict) -> EditOp:
    def tup(name):
        return tuple(data[name]) if name in data else None

    return EditOp(
        OpKind(data["kind"]),
        data.get("description", ""),
        prev_index=data.get("prev_index"),
        next_index=data.get("next_index"),
        box=_box_from_json(data.get("box")),
        old_center=tup("old_center"),
        new_center=tup("new_center"),
        old_scale=tup("old_scale"),
        new_scale=tup("new_scale"),
        new_description=data.get("new_description"),
        layout=layout_from_json(data["layout"]) if "layout" in data else None,
    )


def plan_to_json(plan: EditPlan) -> dict:
    return {
        "dialect": plan.dialect.value,
        "ops": [op_to_json(op) for op in plan.ops],
        "matches": [list(pair) for pair in plan.matches],
        "next_description": plan.next_description,
        "directives": [
            {"action": d.action, "params": d.params} for d in plan.directives
        ],
    }


def plan_from_json(data: dict) -> EditPlan:
    return EditPlan(
        Dialect(data["dialect"]),
        tuple(op_from_json(o) for o in data["ops"]),
        tuple((int(a), int(b)) for a, b in data["matches"]),
        data["next_description"],
        tuple(BackendDirective(d["action"], d["params"]) for d in data["directives"]),
    )
