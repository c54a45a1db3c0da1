"""Edit engine: diff goldens from the case dialogs, replay, directive compilation."""
from __future__ import annotations

import random

import pytest

from li3d.edits import (
    BackendDirective,
    DialectMismatch,
    EditConfig,
    EditPlan,
    OpKind,
    UnresolvedTarget,
    apply,
    compile_directives,
    diff,
    identity_plan,
    plan_from_json,
    plan_to_json,
)
from li3d.layout import BoxObject, Dialect, Layout
from support import (
    CASTLE,
    CASTLE_UPDATED,
    COURTYARD_1,
    COURTYARD_2,
    COURTYARD_3,
    DOG_SOFA_1,
    DOG_SOFA_2,
    DOG_SOFA_3,
    WINDMILL_1,
    WINDMILL_2,
    WINDMILL_3,
    random_layout,
)


def kinds(plan: EditPlan) -> list[OpKind]:
    return [op.kind for op in plan.ops]


class TestDiffGoldens:
    def test_courtyard_duplicate_well_is_one_add(self):
        plan = diff(COURTYARD_1, COURTYARD_2)
        assert kinds(plan) == [OpKind.ADD]
        add = plan.ops[0]
        assert add.description == "a well"
        assert add.box.center == (0.3, -0.2, 0.6)
        assert add.box.scale == (0.5, 0.5, 0.5)
        assert add.next_index == 1
        # the pre-existing well matched by minimal distance, unchanged
        assert (0, 0) in plan.matches

    def test_courtyard_fir_trees_are_three_attribute_edits(self):
        plan = diff(COURTYARD_2, COURTYARD_3)
        assert kinds(plan) == [OpKind.ATTRIBUTE_EDIT] * 3
        for op in plan.ops:
            assert op.description == "a tree"
            assert op.new_description == "a fir tree"

    def test_identical_layouts_give_empty_plan(self):
        plan = diff(COURTYARD_2, COURTYARD_2)
        assert plan.is_empty
        assert apply(COURTYARD_2, plan) == COURTYARD_2

    def test_windmill_wider_tower_is_one_resize(self):
        plan = diff(WINDMILL_1, WINDMILL_2)
        assert kinds(plan) == [OpKind.RESIZE]
        op = plan.ops[0]
        assert op.description == "tower"
        assert op.new_scale == (0.4, 1, 0.4)

    def test_windmill_duplicate_blades_is_add_plus_move(self):
        plan = diff(WINDMILL_2, WINDMILL_3)
        assert sorted(kinds(plan), key=lambda k: k.value) == [OpKind.ADD, OpKind.MOVE]
        move = next(op for op in plan.ops if op.kind is OpKind.MOVE)
        add = next(op for op in plan.ops if op.kind is OpKind.ADD)
        assert move.description == "blades"
        assert move.old_center == (0, 1.5, 0)
        assert move.new_center == (0, 1.5, 0.5)
        assert add.box.center == (0, 1.5, -0.5)

    def test_dog_move_then_remove(self):
        plan = diff(DOG_SOFA_1, DOG_SOFA_2)
        assert kinds(plan) == [OpKind.MOVE]
        assert plan.ops[0].description == "dog"
        assert plan.ops[0].old_center == (0.5, 0.5)
        assert plan.ops[0].new_center == (0.7, 0.5)

        plan = diff(DOG_SOFA_2, DOG_SOFA_3)
        assert kinds(plan) == [OpKind.REMOVE]
        assert plan.ops[0].description == "dog"

    def test_feedback_update_changes_only_scene_description(self):
        plan = diff(CASTLE, CASTLE_UPDATED)
        assert plan.is_empty
        assert plan.next_description == CASTLE_UPDATED.description
        assert apply(CASTLE, plan) == CASTLE_UPDATED

    def test_dialect_mismatch(self):
        with pytest.raises(DialectMismatch):
            diff(CASTLE, DOG_SOFA_1)


class TestApply:
    def test_paper_transitions_replay(self):
        for prev, nxt in [
            (COURTYARD_1, COURTYARD_2),
            (COURTYARD_2, COURTYARD_3),
            (WINDMILL_1, WINDMILL_2),
            (WINDMILL_2, WINDMILL_3),
            (DOG_SOFA_1, DOG_SOFA_2),
            (DOG_SOFA_2, DOG_SOFA_3),
        ]:
            assert apply(prev, diff(prev, nxt)) == nxt

    def test_empty_plan_is_identity(self):
        assert apply(CASTLE, identity_plan(CASTLE)) == CASTLE

    def test_round_trip_1000_random_pairs(self):
        rng = random.Random(4242)
        for _ in range(1000):
            dialect = rng.choice(list(Dialect))
            prev = random_layout(rng, dialect)
            nxt = _mutate(rng, prev) if rng.random() < 0.5 else random_layout(rng, dialect)
            plan = diff(prev, nxt)
            assert apply(prev, plan) == nxt

    def test_unresolved_target(self):
        plan = diff(DOG_SOFA_1, DOG_SOFA_2)
        with pytest.raises(UnresolvedTarget):
            apply(DOG_SOFA_3, plan)

    def test_attribute_edit_preserves_box(self):
        plan = diff(COURTYARD_2, COURTYARD_3)
        result = apply(COURTYARD_2, plan)
        for before, after in zip(COURTYARD_2.objects, result.objects):
            assert before.center == after.center
            assert before.scale == after.scale

    def test_pure_reorder_replays(self):
        reordered = Layout(
            CASTLE.dialect, (CASTLE.objects[1], CASTLE.objects[0]), CASTLE.description
        )
        plan = diff(CASTLE, reordered)
        assert plan.is_empty
        assert apply(CASTLE, plan) == reordered


def _mutate(rng: random.Random, prev: Layout) -> Layout:
    objects = list(prev.objects)
    if objects and rng.random() < 0.4:
        rng.shuffle(objects)
    out = []
    for obj in objects:
        roll = rng.random()
        if roll < 0.15:
            continue  # removed
        if roll < 0.3:
            delta = tuple(rng.uniform(-0.2, 0.2) for _ in obj.center)
            obj = BoxObject(
                obj.description, tuple(c + d for c, d in zip(obj.center, delta)), obj.scale
            )
        elif roll < 0.4:
            obj = BoxObject(
                obj.description, obj.center, tuple(s * rng.uniform(0.5, 1.5) for s in obj.scale)
            )
        elif roll < 0.5:
            obj = BoxObject(obj.description + " edited", obj.center, obj.scale)
        out.append(obj)
    if rng.random() < 0.4:
        extra = random_layout(rng, prev.dialect, max_objects=2).objects
        for obj in extra:
            out.insert(rng.randint(0, len(out)), obj)
    return Layout(prev.dialect, tuple(out), prev.description + " v2")


class TestDuplicateMatching:
    def test_order_invariant_multiset(self):
        rng = random.Random(31)
        for _ in range(200):
            n = rng.randint(2, 5)
            prev_objs = [
                BoxObject("crate", tuple(rng.uniform(-1, 1) for _ in range(3)), (0.2, 0.2, 0.2))
                for _ in range(n)
            ]
            next_objs = [
                BoxObject(
                    "crate",
                    tuple(c + rng.uniform(-0.1, 0.1) for c in o.center),
                    o.scale,
                )
                for o in prev_objs
            ]
            prev = Layout(Dialect.SCENE3D, tuple(prev_objs), "crates")
            base = _op_multiset(diff(prev, Layout(Dialect.SCENE3D, tuple(next_objs), "crates")))
            rng.shuffle(next_objs)
            shuffled = _op_multiset(
                diff(prev, Layout(Dialect.SCENE3D, tuple(next_objs), "crates"))
            )
            assert base == shuffled

    def test_minimal_distance_matching(self):
        prev = Layout(
            Dialect.SCENE3D,
            (
                BoxObject("crate", (0, 0, 0), (0.2, 0.2, 0.2)),
                BoxObject("crate", (0.8, 0, 0), (0.2, 0.2, 0.2)),
            ),
            "two crates",
        )
        nxt = Layout(
            Dialect.SCENE3D,
            (
                BoxObject("crate", (0.75, 0, 0), (0.2, 0.2, 0.2)),
                BoxObject("crate", (0.1, 0, 0), (0.2, 0.2, 0.2)),
            ),
            "two crates",
        )
        plan = diff(prev, nxt)
        # crossed matching would cost 0.75 + 0.7; minimal matching costs 0.1 + 0.05
        assert set(plan.matches) == {(0, 1), (1, 0)}

    def test_many_duplicates_use_dp_path(self):
        rng = random.Random(8)
        prev_objs = [
            BoxObject("box", (i * 0.1 - 0.5, 0, 0), (0.05, 0.05, 0.05)) for i in range(9)
        ]
        next_objs = list(prev_objs)
        rng.shuffle(next_objs)
        prev = Layout(Dialect.SCENE3D, tuple(prev_objs), "boxes")
        nxt = Layout(Dialect.SCENE3D, tuple(next_objs), "boxes")
        plan = diff(prev, nxt)
        assert plan.is_empty  # perfect shuffle matches at zero distance
        assert apply(prev, plan) == nxt


def _op_multiset(plan: EditPlan):
    return sorted(
        (
            op.kind.value,
            op.description,
            op.new_description or "",
            op.old_center or (),
            op.new_center or (),
            op.old_scale or (),
            op.new_scale or (),
            (op.box.center, op.box.scale) if op.box else (),
        )
        for op in plan.ops
    )


class TestFullRegenerate:
    def test_majority_identity_change_triggers_regenerate(self):
        prev = Layout(
            Dialect.SCENE3D,
            tuple(
                BoxObject(f"old thing {i}", (i * 0.2 - 0.4, 0, 0), (0.1, 0.1, 0.1))
                for i in range(4)
            ),
            "old",
        )
        nxt = Layout(
            Dialect.SCENE3D,
            tuple(
                BoxObject(f"new thing {i}", (i * 0.2 - 0.4, 0.5, 0), (0.1, 0.1, 0.1))
                for i in range(4)
            ),
            "new",
        )
        plan = diff(prev, nxt)
        assert kinds(plan) == [OpKind.FULL_REGENERATE]
        assert apply(prev, plan) == nxt
        directives = compile_directives(plan)
        assert [d.action for d in directives] == ["train_scratch"]

    def test_minority_change_does_not_regenerate(self):
        plan = diff(DOG_SOFA_2, DOG_SOFA_3)  # 1 removal out of 2+1 objects
        assert kinds(plan) == [OpKind.REMOVE]

    def test_threshold_is_configurable(self):
        config = EditConfig(full_regenerate_threshold=0.05)
        plan = diff(COURTYARD_1, COURTYARD_2, config)
        assert kinds(plan) == [OpKind.FULL_REGENERATE]


class TestCompileDirectives:
    def test_initial_generation_trains_from_scratch(self):
        plan = diff(Layout(Dialect.SCENE3D, (), ""), CASTLE)
        directives = compile_directives(plan, is_initial=True)
        assert directives == (
            BackendDirective("train_scratch", {"iterations": 8000}),
        )

    def test_add_trains_local_then_joint_finetunes(self):
        plan = diff(COURTYARD_1, COURTYARD_2)
        directives = compile_directives(plan)
        assert [d.action for d in directives] == ["train_local", "joint_finetune"]
        assert directives[0].params["iterations"] == 3000
        assert directives[1].params["iterations"] == 6000

    def test_attribute_edit_finetunes_object(self):
        plan = diff(COURTYARD_2, COURTYARD_3)
        directives = compile_directives(plan)
        assert [d.action for d in directives] == ["finetune_object"] * 3
        assert all(d.params["iterations"] == 6000 for d in directives)

    def test_move_compiles_to_translation(self):
        plan = diff(WINDMILL_2, WINDMILL_3)
        directives = compile_directives(plan)
        translate = next(d for d in directives if d.params.get("mode") == "translate")
        assert translate.params["translation"] == [0, 0, 0.5]

    def test_2d_remove_masks_then_inpaints(self):
        plan = diff(DOG_SOFA_2, DOG_SOFA_3)
        directives = compile_directives(plan)
        assert [d.action for d in directives] == ["mask_extract", "inpaint"]
        assert directives[0].params["score_rank"] == 2
        assert directives[0].params["dilate_px"] == 10

    def test_2d_move_masks_inpaints_pastes(self):
        plan = diff(DOG_SOFA_1, DOG_SOFA_2)
        directives = compile_directives(plan)
        assert [d.action for d in directives] == ["mask_extract", "inpaint", "paste"]
        assert directives[2].params["new_center"] == [0.7, 0.5]

    def test_every_op_maps_to_a_directive(self):
        rng = random.Random(77)
        for _ in range(200):
            dialect = rng.choice(list(Dialect))
            prev = random_layout(rng, dialect)
            nxt = _mutate(rng, prev)
            plan = diff(prev, nxt)
            directives = compile_directives(plan)
            if plan.ops:
                assert directives
                if not any(op.kind is OpKind.FULL_REGENERATE for op in plan.ops):
                    assert len(directives) >= len(plan.ops)

    def test_directive_parameter_validation(self):
        with pytest.raises(ValueError):
            BackendDirective("train_local", {"iterations": 0})
        with pytest.raises(ValueError):
            BackendDirective("mask_extract", {"dilate_px": -1})


class TestPlanJson:
    def test_plan_round_trips_through_json(self):
        rng = random.Random(5)
        for _ in range(100):
            dialect = rng.choice(list(Dialect))
            prev = random_layout(rng, dialect)
            nxt = _mutate(rng, prev)
            plan = diff(prev, nxt).with_directives(compile_directives(diff(prev, nxt)))
            assert plan_from_json(plan_to_json(plan)) == plan
