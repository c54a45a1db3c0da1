"""Versioned sessions: the per-round engine, on-disk persistence, and replay.

A session is a linear history of records; record k's layout equals applying
record k's plan to record k-1's layout.  Files are written temp-then-rename so
a crash between steps never corrupts a session, and renders are stored
content-addressed next to the session files.
"""
from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backends import RenderConfig, RenderResult, backend_for, emit_external_directives
from .edits import (
    DEFAULT_CONFIG,
    EditConfig,
    EditPlan,
    apply as apply_plan,
    compile_directives,
    diff,
    plan_from_json,
    plan_to_json,
)
from .feedback import Feedback, MockVerifier, Verdict, run_feedback_loop
from .interpreter import ChatTurn, Instruction, LayoutInterpreter
from .layout import (
    Dialect,
    Layout,
    empty_layout,
    error_violations,
    layout_from_json,
    layout_to_json,
    normalize,
    validate,
)
from .parsing import serialize_layout
from .prompting import context_prompt

SCHEMA_VERSION = 1

POLICY_OFF = "off"
POLICY_ON_DEMAND = "on_demand"
POLICY_EVERY_ROUND = "every_round"
POLICIES = (POLICY_OFF, POLICY_ON_DEMAND, POLICY_EVERY_ROUND)

MANUAL_ADJUSTMENT = "<manual adjustment>"
FEEDBACK_UPDATE = "<feedback update>"


class UnknownSession(KeyError):
    pass


class StepInProgress(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, violations):
        super().__init__("; ".join(v.message for v in violations))
        self.violations = tuple(violations)


@dataclass(frozen=True)
class SessionRecord:
    round_index: int
    instruction: str
    raw_response: str
    layout: Layout
    plan: EditPlan
    render_ref: dict | None
    feedback_trail: tuple[Feedback, ...] = ()
    degraded: bool = False


@dataclass
class Session:
    id: str
    dialect: Dialect
    policy: str = POLICY_OFF
    records: list[SessionRecord] = field(default_factory=list)
    conversation: list[ChatTurn] = field(default_factory=list)

    @property
    def latest_layout(self) -> Layout:
        return self.records[-1].layout if self.records else empty_layout(self.dialect)


# --- JSON schema --------------------------------------------------------------


def _feedback_to_json(fb: Feedback) -> dict:
    return {"verdict": fb.verdict.value, "reason": fb.reason, "detail": fb.detail}


def _feedback_from_json(data: dict) -> Feedback:
    return Feedback(Verdict(data["verdict"]), data["reason"], data.get("detail"))


def record_to_json(record: SessionRecord) -> dict:
    return {
        "round_index": record.round_index,
        "instruction": record.instruction,
        "raw_response": record.raw_response,
        "layout": layout_to_json(record.layout),
        "plan": plan_to_json(record.plan),
        "render_ref": record.render_ref,
        "feedback_trail": [_feedback_to_json(f) for f in record.feedback_trail],
        "degraded": record.degraded,
    }


def record_from_json(data: dict) -> SessionRecord:
    return SessionRecord(
        data["round_index"],
        data["instruction"],
        data["raw_response"],
        layout_from_json(data["layout"]),
        plan_from_json(data["plan"]),
        data.get("render_ref"),
        tuple(_feedback_from_json(f) for f in data.get("feedback_trail", [])),
        data.get("degraded", False),
    )


def session_to_json(session: Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "dialect": session.dialect.value,
        "policy": session.policy,
        "conversation": [{"role": t.role, "content": t.content} for t in session.conversation],
        "records": [record_to_json(r) for r in session.records],
    }


def session_from_json(data: dict) -> Session:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported session schema {data.get('schema_version')!r}")
    return Session(
        data["id"],
        Dialect(data["dialect"]),
        data.get("policy", POLICY_OFF),
        [record_from_json(r) for r in data["records"]],
        [ChatTurn(t["role"], t["content"]) for t in data["conversation"]],
    )


# --- store ---------------------------------------------------------------------


class SessionStore:
    """One JSON file per session plus content-addressed render PNGs."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        (self.root / "renders").mkdir(parents=True, exist_ok=True)
        (self.root / "directives").mkdir(parents=True, exist_ok=True)

    def session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.json"

    def directive_path(self, session_id: str, round_index: int) -> Path:
        return self.root / "directives" / f"{session_id}-{round_index:03d}.json"

    def save(self, session: Session) -> None:
        path = self.session_path(session.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(session_to_json(session), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, path)

    def load(self, session_id: str) -> Session:
        path = self.session_path(session_id)
        if not path.exists():
            raise UnknownSession(session_id)
        return session_from_json(json.loads(path.read_text(encoding="utf-8")))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "sessions").glob("*.json"))

    def save_render(self, result: RenderResult) -> dict:
        refs = {}
        for name, image in result.views:
            data = image.to_png()
            digest = hashlib.sha256(data).hexdigest()
            path = self.root / "renders" / f"{digest}.png"
            if not path.exists():
                tmp = path.with_suffix(".png.tmp")
                tmp.write_bytes(data)
                os.replace(tmp, path)
            refs[name] = {"digest": digest, "file": f"renders/{digest}.png"}
        return refs

    def render_bytes(self, ref: dict) -> bytes:
        data = (self.root / ref["file"]).read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest != ref["digest"]:
            raise ValueError(f"render file digest mismatch for {ref['file']}")
        return data

    # last-used session id, so the CLI can omit --session
    def current_session(self) -> str | None:
        path = self.root / "current_session"
        return path.read_text().strip() if path.exists() else None

    def set_current_session(self, session_id: str) -> None:
        tmp = self.root / "current_session.tmp"
        tmp.write_text(session_id)
        os.replace(tmp, self.root / "current_session")


# --- engine ---------------------------------------------------------------------


class BackendError(Exception):
    pass


class SessionEngine:
    """Wires interpreter, edit engine, backend, and feedback per round."""

    def __init__(
        self,
        store: SessionStore,
        client=None,
        verifier=None,
        render_config: RenderConfig = RenderConfig(),
        edit_config: EditConfig = DEFAULT_CONFIG,
        max_feedback_rounds: int = 2,
        backend_factory=None,
        max_retries: int = 3,
    ):
        self.store = store
        self.client = client
        self.verifier = verifier or MockVerifier()
        self.render_config = render_config
        self.edit_config = edit_config
        self.max_feedback_rounds = max_feedback_rounds
        self.backend_factory = backend_factory or (
            lambda dialect: backend_for(dialect, self.render_config)
        )
        self.max_retries = max_retries
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _interpreter(self) -> LayoutInterpreter:
        if self.client is None:
            raise RuntimeError(
                "no interpreter configured: pass a client or set LI3D_API_KEY"
            )
        return LayoutInterpreter(self.client, max_retries=self.max_retries)

    def create_session(self, dialect: Dialect, policy: str = POLICY_OFF) -> Session:
        if policy not in POLICIES:
            raise ValueError(f"unknown feedback policy {policy!r}")
        session = Session(secrets.token_hex(8), dialect, policy)
        self.store.save(session)
        return session

    def step(self, session_id: str, text: str) -> SessionRecord:
        lock = self._lock(session_id)
        if not lock.acquire(blocking=False):
            raise StepInProgress(session_id)
        try:
            return self._step_locked(session_id, text)
        finally:
            lock.release()

    def _step_locked(self, session_id: str, text: str) -> SessionRecord:
        session = self.store.load(session_id)
        interpreter = self._interpreter()
        round_index = len(session.records)
        prev_layout = session.latest_layout
        if round_index == 0 or not session.conversation:
            result = interpreter.interpret_initial(
                Instruction(text, round_index), session.dialect
            )
        else:
            result = interpreter.interpret_edit(
                Instruction(text, round_index), session.conversation, prev_layout
            )
        layout = result.layout
        if session.dialect is not Dialect.IMAGE2D:
            layout = normalize(layout)
        history = result.turns

        render_result, refs, degraded = self._render(session.dialect, layout)

        trail: tuple[Feedback, ...] = ()
        if session.policy == POLICY_EVERY_ROUND and not degraded:
            loop = run_feedback_loop(
                layout,
                render_result,
                self.backend_factory(session.dialect),
                self.verifier,
                interpreter,
                history,
                max_rounds=self.max_feedback_rounds,
            )
            layout, render_result, trail = loop.layout, loop.render, loop.trail
            history = tuple(loop.history)
            refs = self.store.save_render(render_result)

        plan = diff(prev_layout, layout, self.edit_config)
        plan = plan.with_directives(
            compile_directives(plan, is_initial=round_index == 0, config=self.edit_config)
        )
        emit_external_directives(
            plan, layout, self.store.directive_path(session_id, round_index), self.edit_config
        )
        record = SessionRecord(
            round_index, text, result.raw.text, layout, plan, refs, trail, degraded
        )
        session.records.append(record)
        session.conversation = list(history)
        self.store.save(session)
        return record

    def adjust(self, session_id: str, edited_layout: Layout) -> SessionRecord:
        lock = self._lock(session_id)
        if not lock.acquire(blocking=False):
            raise StepInProgress(session_id)
        try:
            return self._adjust_locked(session_id, edited_layout)
        finally:
            lock.release()

    def _adjust_locked(self, session_id: str, edited_layout: Layout) -> SessionRecord:
        session = self.store.load(session_id)
        if edited_layout.dialect is not session.dialect:
            raise ValidationError(validate(edited_layout) or [])
        hard = error_violations(validate(edited_layout))
        if hard:
            raise ValidationError(hard)
        round_index = len(session.records)
        prev_layout = session.latest_layout
        plan = diff(prev_layout, edited_layout, self.edit_config)
        plan = plan.with_directives(
            compile_directives(plan, is_initial=round_index == 0, config=self.edit_config)
        )
        emit_external_directives(
            plan, edited_layout,
            self.store.directive_path(session_id, round_index), self.edit_config,
        )
        render_result, refs, degraded = self._render(session.dialect, edited_layout)
        serialized = serialize_layout(edited_layout)
        record = SessionRecord(
            round_index, MANUAL_ADJUSTMENT, serialized, edited_layout, plan, refs, (), degraded
        )
        session.records.append(record)
        # future edits must condition on the corrected layout as if the model produced it
        conversation = list(session.conversation)
        if not conversation:
            conversation.append(ChatTurn("system", context_prompt(session.dialect)))
        conversation.append(ChatTurn("assistant", serialized))
        session.conversation = conversation
        self.store.save(session)
        return record

    def run_feedback(self, session_id: str) -> tuple[SessionRecord, bool]:
        """On-demand feedback over the latest record; returns (record, changed)."""
        lock = self._lock(session_id)
        if not lock.acquire(blocking=False):
            raise StepInProgress(session_id)
        try:
            return self._run_feedback_locked(session_id)
        finally:
            lock.release()

    def _run_feedback_locked(self, session_id: str) -> tuple[SessionRecord, bool]:
        session = self.store.load(session_id)
        if not session.records:
            raise ValueError("session has no rounds to verify")
        latest = session.records[-1]
        backend = self.backend_factory(session.dialect)
        render_result = backend.init(latest.layout)
        loop = run_feedback_loop(
            latest.layout,
            render_result,
            backend,
            self.verifier,
            self._interpreter(),
            session.conversation,
            max_rounds=self.max_feedback_rounds,
        )
        if loop.layout == latest.layout:
            updated = replace(latest, feedback_trail=latest.feedback_trail + loop.trail)
            session.records[-1] = updated
            self.store.save(session)
            return updated, False
        round_index = len(session.records)
        plan = diff(latest.layout, loop.layout, self.edit_config)
        plan = plan.with_directives(compile_directives(plan, config=self.edit_config))
        emit_external_directives(
            plan, loop.layout, self.store.directive_path(session_id, round_index), self.edit_config
        )
        refs = self.store.save_render(loop.render)
        record = SessionRecord(
            round_index, FEEDBACK_UPDATE, serialize_layout(loop.layout),
            loop.layout, plan, refs, loop.trail, False,
        )
        session.records.append(record)
        session.conversation = list(loop.history)
        self.store.save(session)
        return record, True

    def _render(self, dialect: Dialect, layout: Layout):
        backend = self.backend_factory(dialect)
        try:
            render_result = backend.init(layout)
            refs = self.store.save_render(render_result)
            return render_result, refs, False
        except BackendError:
            return None, None, True

    # --- replay -------------------------------------------------------------

    def replay_session(self, session_id: str, client) -> list[tuple[int, bool]]:
        """Re-drive a session's instructions through ``client``; compare layouts.

        Returns one (round_index, matches) pair per record.  The record
        invariant apply(prev, plan) == layout is checked along the way.
        """
        session = self.store.load(session_id)
        interpreter = LayoutInterpreter(client, max_retries=self.max_retries)
        outcomes: list[tuple[int, bool]] = []
        prev_layout = empty_layout(session.dialect)
        history: tuple[ChatTurn, ...] = ()
        for record in session.records:
            replayed = apply_plan(prev_layout, record.plan)
            plan_ok = replayed == record.layout
            if record.instruction == MANUAL_ADJUSTMENT:
                layout = record.layout
                if not history:
                    history = (ChatTurn("system", context_prompt(session.dialect)),)
                history = history + (ChatTurn("assistant", record.raw_response),)
            else:
                layout, history = self._replay_record(
                    interpreter, session.dialect, record, history, prev_layout
                )
            outcomes.append((record.round_index, plan_ok and layout == record.layout))
            prev_layout = record.layout
        return outcomes

    def _replay_record(self, interpreter, dialect, record, history, prev_layout):
        if record.instruction == FEEDBACK_UPDATE:
            layout = prev_layout
        elif not history:
            result = interpreter.interpret_initial(
                Instruction(record.instruction, record.round_index), dialect
            )
            layout, history = result.layout, result.turns
        else:
            result = interpreter.interpret_edit(
                Instruction(record.instruction, record.round_index), history, prev_layout
            )
            layout, history = result.layout, result.turns
        if dialect is not Dialect.IMAGE2D:
            layout = normalize(layout)
        for fb in record.feedback_trail:
            if fb.verdict is Verdict.MISMATCH and fb.detail:
                result = interpreter.interpret_with_feedback(fb, history, layout)
                layout, history = result.layout, result.turns
                if dialect is not Dialect.IMAGE2D:
                    layout = normalize(layout)
        return layout, history
