"""Chat-driven layout interpretation with bounded retries and transcript replay.

The interpreter keeps the whole conversation as the conditioning mechanism:
each edit round appends a user turn and parses the assistant's reply into a
layout.  Cassettes record request/response pairs so nondeterministic model
interactions replay bit-exactly in tests and offline runs.
"""
from __future__ import annotations

import hashlib
import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .layout import Dialect, Layout, normalize
from .parsing import (
    ParseDiagnostics,
    ParseError,
    RawResponse,
    format_block_example,
    parse_layout,
)
from .prompting import TemplateId, context_prompt, render

DEFAULT_MODEL = "gpt-3.5-turbo"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MAX_RETRIES = 3


class TransportError(Exception):
    """Network, auth, or protocol failure talking to the model endpoint."""


class CassetteMismatch(TransportError):
    """Replay got a request that does not match the recorded transcript."""


class ParseFailed(Exception):
    def __init__(self, message: str, attempts: int, last_response: str):
        super().__init__(message)
        self.attempts = attempts
        self.last_response = last_response


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role!r}")
        if not self.content:
            raise ValueError("chat turns must carry content")


@dataclass(frozen=True)
class Instruction:
    text: str
    round_index: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("instructions must be nonempty")
        if self.round_index < 0:
            raise ValueError("round_index must be non-negative")


class ChatClient(Protocol):
    def complete(self, turns: Sequence[ChatTurn]) -> str: ...


def fingerprint(turns: Sequence[ChatTurn]) -> str:
    payload = json.dumps(
        [[t.role, t.content] for t in turns], ensure_ascii=False, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CassetteEntry:
    fingerprint: str
    response: str


@dataclass
class Cassette:
    """Ordered request/response transcript; replay is strict about order and content."""

    entries: list[CassetteEntry] = field(default_factory=list)
    mode: str = "replay"
    cursor: int = 0

    @classmethod
    def load(cls, path) -> "Cassette":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls([CassetteEntry(e["fingerprint"], e["response"]) for e in data])

    def save(self, path) -> None:
        data = [{"fingerprint": e.fingerprint, "response": e.response} for e in self.entries]
        tmp = os.fspath(path) + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(data, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp, path)

    def rewind(self) -> None:
        self.cursor = 0


class CassetteClient:
    """Replays a cassette, or records through an inner client when given one."""

    def __init__(self, cassette: Cassette, inner: ChatClient | None = None):
        self.cassette = cassette
        self.inner = inner
        if inner is not None:
            cassette.mode = "record"

    def complete(self, turns: Sequence[ChatTurn]) -> str:
        fp = fingerprint(turns)
        if self.cassette.mode == "record":
            response = self.inner.complete(turns)
            self.cassette.entries.append(CassetteEntry(fp, response))
            return response
        if self.cassette.cursor >= len(self.cassette.entries):
            raise CassetteMismatch(
                f"cassette exhausted after {len(self.cassette.entries)} entries"
            )
        entry = self.cassette.entries[self.cassette.cursor]
        if entry.fingerprint != fp:
            raise CassetteMismatch(
                f"request {self.cassette.cursor} does not match the recorded fingerprint"
            )
        self.cassette.cursor += 1
        return entry.response


class ScriptedClient:
    """Serves canned responses in order, or via a callable; for tests and oracles."""

    def __init__(self, responses: Sequence[str] | Callable[[Sequence[ChatTurn]], str]):
        self._responses = responses
        self._cursor = 0

    def complete(self, turns: Sequence[ChatTurn]) -> str:
        if callable(self._responses):
            return self._responses(turns)
        if self._cursor >= len(self._responses):
            raise TransportError("scripted client ran out of responses")
        response = self._responses[self._cursor]
        self._cursor += 1
        return response


class HttpChatClient:
    """Chat-completions style HTTP client configured from the environment."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        temperature: float = 0.0,
        timeout: float = 120.0,
    ):
        self.base_url = (base_url or os.environ.get("LI3D_BASE_URL") or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key or os.environ.get("LI3D_API_KEY")
        self.model = model or os.environ.get("LI3D_MODEL") or DEFAULT_MODEL
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, turns: Sequence[ChatTurn]) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": t.role, "content": t.content} for t in turns],
            "temperature": self.temperature,
        }
        request = urllib.request.Request(
            self.base_url + "/chat/completions",
            data=json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.load(response)
        except (urllib.error.URLError, urllib.error.HTTPError, OSError, ValueError) as exc:
            raise TransportError(str(exc)) from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {body!r}") from exc


@dataclass(frozen=True)
class InterpretResult:
    layout: Layout
    raw: RawResponse
    turns: tuple[ChatTurn, ...]
    diagnostics: ParseDiagnostics
    retries: int


class LayoutInterpreter:
    """Turns instructions into layouts through a chat client.

    Parse failures trigger a corrective turn restating the format block, up to
    ``max_retries`` times.  Retry churn stays out of the returned conversation;
    only the accepted exchange is appended.
    """

    def __init__(self, client: ChatClient, max_retries: int = DEFAULT_MAX_RETRIES):
        self.client = client
        self.max_retries = max_retries

    def interpret_initial(self, instruction: Instruction, dialect: Dialect) -> InterpretResult:
        base = (
            ChatTurn("system", context_prompt(dialect)),
            ChatTurn("user", instruction.text),
        )
        layout, raw, diagnostics, retries = self._complete_and_parse(base, dialect)
        if dialect is not Dialect.IMAGE2D:
            layout = normalize(layout)
        turns = base + (ChatTurn("assistant", raw.text),)
        return InterpretResult(layout, raw, turns, diagnostics, retries)

    def interpret_edit(
        self,
        instruction: Instruction,
        history: Sequence[ChatTurn],
        prev_layout: Layout,
    ) -> InterpretResult:
        if not history:
            raise ValueError("edit rounds need the conversation history")
        base = tuple(history) + (ChatTurn("user", instruction.text),)
        layout, raw, diagnostics, retries = self._complete_and_parse(base, prev_layout.dialect)
        turns = base + (ChatTurn("assistant", raw.text),)
        return InterpretResult(layout, raw, turns, diagnostics, retries)

    def interpret_with_feedback(
        self,
        feedback,
        history: Sequence[ChatTurn],
        prev_layout: Layout,
    ) -> InterpretResult:
        if not getattr(feedback, "detail", None) or not feedback.detail.strip():
            raise ValueError("feedback must carry a nonempty detail description")
        prompt = render(TemplateId.UPDATE_WITH_FEEDBACK, {"FEEDBACK": feedback.detail})
        return self.interpret_edit(Instruction(prompt), history, prev_layout)

    def _complete_and_parse(self, base: tuple[ChatTurn, ...], dialect: Dialect):
        turns = base
        retries = 0
        last_response = ""
        while True:
            response = self.client.complete(turns)
            last_response = response
            raw = RawResponse(response, dialect)
            try:
                layout, diagnostics = parse_layout(raw)
                return layout, raw, diagnostics, retries
            except ParseError as exc:
                retries += 1
                if retries > self.max_retries:
                    raise ParseFailed(
                        f"no usable layout after {retries} attempts: {exc}",
                        attempts=retries,
                        last_response=last_response,
                    ) from exc
                turns = turns + (
                    ChatTurn("assistant", response),
                    ChatTurn("user", _corrective_message(dialect, exc)),
                )


def _corrective_message(dialect: Dialect, error: ParseError) -> str:
    return (
        f"That response could not be read as a layout ({error}). "
        "Respond again with only the layout, using exactly this format:\n\n"
        "```\n" + format_block_example(dialect) + "\n'''"
    )
