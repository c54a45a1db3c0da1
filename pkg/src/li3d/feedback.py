"""Visual feedback: verdict parsing, verifier contracts, and the bounded update loop.

A verifier looks at a rendered view and answers in free text whether it
matches the scene description.  On a mismatch the loop asks for an enriched
description and feeds it back through the interpreter, re-rendering until the
verifier is satisfied or the round budget runs out.
"""
from __future__ import annotations

import base64
import json
import os
import random
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from .backends import RenderResult
from .interpreter import TransportError
from .layout import Dialect, Layout, normalize
from .prompting import TemplateId, render


class Verdict(Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class Feedback:
    verdict: Verdict
    reason: str
    detail: str | None = None


class VerdictUnparseable(Exception):
    def __init__(self, answer: str):
        super().__init__(f"could not classify verifier answer: {answer[:120]!r}")
        self.answer = answer


NEGATION_PATTERNS = ("does not match", "doesn't match", "do not match", "not match")
AFFIRMATION_PATTERNS = ("does match", "matches", r"\byes\b")


def parse_verdict(
    answer: str,
    negations: Sequence[str] = NEGATION_PATTERNS,
    affirmations: Sequence[str] = AFFIRMATION_PATTERNS,
) -> Verdict:
    """Classify a free-text verifier answer by its first sentence."""
    if not answer.strip():
        raise VerdictUnparseable(answer)
    first = re.split(r"[.!?]", answer, maxsplit=1)[0].lower()
    for pattern in negations:
        if re.search(pattern, first):
            return Verdict.MISMATCH
    for pattern in affirmations:
        if re.search(pattern, first):
            return Verdict.MATCH
    raise VerdictUnparseable(answer)


class Verifier(Protocol):
    def verify(self, render_result: RenderResult, description: str) -> str: ...
    def describe(self, render_result: RenderResult, description: str) -> str: ...


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _missing_tokens(layout: Layout, description: str) -> list[str]:
    have = set(_tokens(description))
    missing: list[str] = []
    for obj in layout.objects:
        for token in _tokens(obj.description):
            if token not in have and token not in missing:
                missing.append(token)
    return missing


class MockVerifier:
    """Deterministic verifier: the description must mention every object token."""

    def verify(self, render_result: RenderResult, description: str) -> str:
        missing = _missing_tokens(render_result.layout_snapshot, description)
        if not missing:
            return f'Yes, the image matches the description "{description}".'
        return (
            f'The image does not match the description "{description}". '
            f"The rendered scene also contains: {', '.join(missing)}."
        )

    def describe(self, render_result: RenderResult, description: str) -> str:
        missing = _missing_tokens(render_result.layout_snapshot, description)
        if not missing:
            return f"The scene already matches: {description}"
        return (
            f"To match the scene, the description should also mention: "
            f"{', '.join(missing)}. Expand it with these elements."
        )


class ScriptedVerifier:
    """Serves canned verify/describe answers in call order; for transcript replay."""

    def __init__(self, answers: Sequence[str]):
        self._answers = list(answers)
        self.calls: list[str] = []

    def _next(self, kind: str) -> str:
        if not self._answers:
            raise TransportError("scripted verifier ran out of answers")
        self.calls.append(kind)
        return self._answers.pop(0)

    def verify(self, render_result: RenderResult, description: str) -> str:
        return self._next("verify")

    def describe(self, render_result: RenderResult, description: str) -> str:
        return self._next("describe")


class HttpVerifier:
    """LLaVA-style endpoint: chat contract plus a base64 PNG attachment."""

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        view: str = "front",
        timeout: float = 120.0,
    ):
        self.base_url = (base_url or os.environ.get("LI3D_VERIFIER_URL") or "").rstrip("/")
        self.model = model or os.environ.get("LI3D_VERIFIER_MODEL") or "llava-13b"
        self.view = view
        self.timeout = timeout
        if not self.base_url:
            raise TransportError("no verifier endpoint configured (LI3D_VERIFIER_URL)")

    def _ask(self, render_result: RenderResult, prompt: str) -> str:
        names = render_result.view_names()
        name = self.view if self.view in names else names[0]
        image_b64 = base64.b64encode(render_result.view(name).to_png()).decode("ascii")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "image": image_b64,
        }
        request = urllib.request.Request(
            self.base_url + "/chat/completions",
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.load(response)
            return body["choices"][0]["message"]["content"]
        except (urllib.error.URLError, OSError, ValueError, KeyError, IndexError) as exc:
            raise TransportError(str(exc)) from exc

    def verify(self, render_result: RenderResult, description: str) -> str:
        return self._ask(
            render_result, render(TemplateId.VERIFY_MATCH, {"DESCRIPTION": description})
        )

    def describe(self, render_result: RenderResult, description: str) -> str:
        return self._ask(
            render_result, render(TemplateId.DESCRIBE_DETAIL, {"DESCRIPTION": description})
        )


@dataclass(frozen=True)
class FeedbackLoopResult:
    layout: Layout
    render: RenderResult
    trail: tuple[Feedback, ...]
    history: tuple
    anomalies: tuple[str, ...] = ()


def run_feedback_loop(
    layout: Layout,
    render_result: RenderResult,
    backend,
    verifier: Verifier,
    interpreter,
    history,
    max_rounds: int = 2,
    view: str = "front",
    rng: random.Random | None = None,
) -> FeedbackLoopResult:
    """Verify, describe, and update the layout up to ``max_rounds`` times.

    A Match verdict (or an unreadable one, conservatively treated as Match)
    stops the loop with everything unchanged.  When ``rng`` is given the
    checked view is sampled uniformly instead of using ``view``.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    trail: list[Feedback] = []
    anomalies: list[str] = []
    history = tuple(history)
    for _ in range(max_rounds):
        chosen = rng.choice(sorted(render_result.view_names())) if rng else view
        sampled = RenderResult(
            ((chosen, render_result.view(chosen)),),
            render_result.layout_snapshot,
            render_result.backend_id,
        )
        answer = verifier.verify(sampled, layout.description)
        try:
            verdict = parse_verdict(answer)
        except VerdictUnparseable:
            trail.append(Feedback(Verdict.MATCH, answer))
            anomalies.append(f"unparseable verdict treated as match: {answer[:80]!r}")
            break
        if verdict is Verdict.MATCH:
            trail.append(Feedback(Verdict.MATCH, answer))
            break
        detail = verifier.describe(sampled, layout.description)
        feedback = Feedback(Verdict.MISMATCH, answer, detail)
        trail.append(feedback)
        result = interpreter.interpret_with_feedback(feedback, history, layout)
        layout = result.layout
        if layout.dialect is not Dialect.IMAGE2D:
            layout = normalize(layout)
        history = result.turns
        render_result = backend.init(layout)
    return FeedbackLoopResult(layout, render_result, tuple(trail), history, tuple(anomalies))
