"""Parse free-form interpreter responses into layouts; serialize layouts back.

The text form is four key-value lines (three parallel lists plus a scene
description), optionally wrapped in code fences and surrounded by prose.  The
last complete block in a response wins.  ``serialize_layout`` emits the
canonical byte-exact form used in prompts and golden fixtures.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .layout import DESCRIPTION_KEY, BoxObject, Dialect, Layout


class ParseError(Exception):
    """Base class for layout-parsing failures."""


class NoBlockFound(ParseError):
    pass


class LengthMismatch(ParseError):
    pass


class MalformedList(ParseError):
    pass


class DialectMismatch(ParseError):
    pass


@dataclass(frozen=True)
class RawResponse:
    text: str
    dialect_hint: Dialect


@dataclass(frozen=True)
class ParseDiagnostics:
    block_span: tuple[int, int]
    warnings: tuple[str, ...] = ()


_KEY_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*?)\s*$")
_FENCE_RE = re.compile(r"^\s*(`{3,}[\w-]*|'{3,}|\"{3,})\s*$")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t"}


@dataclass
class _Block:
    """One candidate run of key lines."""

    values: dict[str, str] = field(default_factory=dict)
    start: int = -1
    end: int = -1


def _scan_blocks(text: str, keys: tuple[str, ...]) -> tuple[list[_Block], list[str]]:
    """Split the text into runs of known key lines.

    Blank lines, fences, and unknown ``key: value`` lines never break a run;
    prose does.  A repeated key starts a new block.
    """
    known = set(keys)
    blocks: list[_Block] = []
    warnings: list[str] = []
    current: _Block | None = None
    offset = 0

    def close():
        nonlocal current
        if current is not None and current.values:
            blocks.append(current)
        current = None

    for line in text.splitlines(keepends=True):
        stripped = line.rstrip("\n").rstrip("\r")
        line_start = offset
        offset += len(line)
        if not stripped.strip() or _FENCE_RE.match(stripped):
            continue
        m = _KEY_LINE_RE.match(stripped)
        if m and m.group(1) in known:
            key = m.group(1)
            if current is None:
                current = _Block()
            elif key in current.values:
                close()
                current = _Block()
            if current.start < 0:
                current.start = line_start
            current.values[key] = m.group(2)
            current.end = line_start + len(stripped)
        elif m and current is not None:
            warnings.append(f"ignored unknown key '{m.group(1)}' inside a layout block")
        elif not m:
            close()
    close()
    return blocks, warnings


def _unquote(text: str, pos: int) -> tuple[str, int]:
    """Read a quoted string starting at ``pos``; returns (value, next position)."""
    quote = text[pos]
    out: list[str] = []
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text) and text[i + 1] in _ESCAPES:
            out.append(_ESCAPES[text[i + 1]])
            i += 2
            continue
        if ch == quote:
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise MalformedList(f"unterminated {quote}-quoted string")


def _parse_string_list(value: str, key: str) -> list[str]:
    text = value.strip()
    if not text.startswith("["):
        raise MalformedList(f"{key}: expected a bracketed list, got {text[:40]!r}")
    i = 1
    items: list[str] = []
    expect_item = True
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "]":
            return items
        elif ch in "'\"":
            if not expect_item:
                raise MalformedList(f"{key}: missing comma between items")
            item, i = _unquote(text, i)
            items.append(item)
            expect_item = False
        elif ch == ",":
            if expect_item:
                raise MalformedList(f"{key}: unexpected comma")
            expect_item = True
            i += 1
        else:
            raise MalformedList(f"{key}: unexpected character {ch!r}")
    raise MalformedList(f"{key}: unbalanced brackets")


def _parse_number(token: str, key: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise MalformedList(f"{key}: non-finite number {token!r}")
    return value


def _parse_number_matrix(value: str, key: str) -> list[list[float]]:
    """Parse a list of fixed-width number lists like ``[[0, -0.5, 0], [0, 0, 0]]``."""
    text = value.strip()
    if not text.startswith("["):
        raise MalformedList(f"{key}: expected a bracketed list, got {text[:40]!r}")
    rows: list[list[float]] = []
    row: list[float] | None = None
    i = 1
    while i < len(text):
        ch = text[i]
        if ch.isspace() or ch == ",":
            i += 1
        elif ch == "[":
            if row is not None:
                raise MalformedList(f"{key}: nested too deep")
            row = []
            i += 1
        elif ch == "]":
            if row is None:
                return rows
            rows.append(row)
            row = None
            i += 1
        else:
            m = _NUMBER_RE.match(text, i)
            if not m or row is None:
                raise MalformedList(f"{key}: unexpected token at {text[i:i + 20]!r}")
            row.append(_parse_number(m.group(0), key))
            i = m.end()
    raise MalformedList(f"{key}: unbalanced brackets")


def _parse_description(value: str, warnings: list[str]) -> str:
    text = value.strip()
    if text and text[0] in "'\"":
        out, end = _unquote(text, 0)
        if text[end:].strip():
            warnings.append("ignored trailing text after the quoted description")
        return out
    return text


def parse_layout(raw: RawResponse) -> tuple[Layout, ParseDiagnostics]:
    """Extract the last complete layout block from a response.

    Raises NoBlockFound, LengthMismatch, MalformedList, or DialectMismatch.
    """
    dialect = raw.dialect_hint
    desc_key, center_key, scale_key = dialect.keys
    keys = (desc_key, center_key, scale_key, DESCRIPTION_KEY)
    blocks, warnings = _scan_blocks(raw.text, keys)
    complete = [b for b in blocks if all(k in b.values for k in keys)]
    if not complete:
        for other in Dialect:
            if other is dialect or other.keys == dialect.keys:
                continue
            other_keys = other.keys + (DESCRIPTION_KEY,)
            other_blocks, _ = _scan_blocks(raw.text, other_keys)
            if any(all(k in b.values for k in other_keys) for b in other_blocks):
                raise DialectMismatch(
                    f"response contains a {other.value} block but {dialect.value} was expected"
                )
        raise NoBlockFound("no complete layout block in the response")
    if len(complete) > 1:
        warnings.append(f"{len(complete)} layout blocks found; using the last")
    block = complete[-1]

    descriptions = _parse_string_list(block.values[desc_key], desc_key)
    centers = _parse_number_matrix(block.values[center_key], center_key)
    scales = _parse_number_matrix(block.values[scale_key], scale_key)
    scene_description = _parse_description(block.values[DESCRIPTION_KEY], warnings)

    if not (len(descriptions) == len(centers) == len(scales)):
        raise LengthMismatch(
            f"list lengths differ: {desc_key}={len(descriptions)}, "
            f"{center_key}={len(centers)}, {scale_key}={len(scales)}"
        )
    dims = dialect.dims
    for label, rows in ((center_key, centers), (scale_key, scales)):
        for i, row in enumerate(rows):
            if len(row) != dims:
                raise MalformedList(f"{label}[{i}] has {len(row)} components, expected {dims}")

    objects = tuple(
        BoxObject(d, tuple(c), tuple(s)) for d, c, s in zip(descriptions, centers, scales)
    )
    layout = Layout(dialect, objects, scene_description)
    return layout, ParseDiagnostics((block.start, block.end), tuple(warnings))


# --- serialization ----------------------------------------------------------


def format_number(value: float) -> str:
    """Shortest decimal that round-trips; integral values print without a point."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def quote_string(text: str) -> str:
    """Single quotes are canonical; fall back to double quotes or escapes."""
    body = text.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")
    if "'" in body and '"' not in body:
        return '"' + body + '"'
    return "'" + body.replace("'", "\\'") + "'"


def _format_matrix(rows: list[tuple[float, ...]]) -> str:
    inner = ", ".join("[" + ", ".join(format_number(v) for v in row) + "]" for row in rows)
    return "[" + inner + "]"


def serialize_layout(layout: Layout) -> str:
    """The canonical four-line text form, byte-deterministic."""
    desc_key, center_key, scale_key = layout.dialect.keys
    names = "[" + ", ".join(quote_string(o.description) for o in layout.objects) + "]"
    centers = _format_matrix([o.center for o in layout.objects])
    scales = _format_matrix([o.scale for o in layout.objects])
    return (
        f"{desc_key}: {names}\n"
        f"{center_key}: {centers}\n"
        f"{scale_key}: {scales}\n"
        f"{DESCRIPTION_KEY}: {quote_string(layout.description)}"
    )


def format_block_example(dialect: Dialect) -> str:
    """The format skeleton shown in context prompts and retry reminders."""
    desc_key, center_key, scale_key = dialect.keys
    if dialect is Dialect.IMAGE2D:
        return (
            f"{desc_key}: ['a object description', 'a object description']\n"
            f"{center_key}: [[0.1, 0.2], [0.3, 0.4]]\n"
            f"{scale_key}: [[0.9, 0.9], [0.7, 0.8]]\n"
            "description: 'description of the whole scene'"
        )
    noun = "single object" if dialect is Dialect.SCENE3D else "a object part"
    whole = "scene" if dialect is Dialect.SCENE3D else "object"
    return (
        f"{desc_key}: ['description of {noun}', 'description of {noun}']\n"
        f"{center_key}: [[0, 0, 0], [0, 0, 0]]\n"
        f"{scale_key}: [[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]]\n"
        f"description: 'description of the whole {whole}'"
    )
