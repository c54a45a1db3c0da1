"""Prompt templates for the layout interpreter and the visual verifier.

Templates live as text assets under ``prompts/`` so they can be revised
without touching code; golden fixtures pin the shipped versions.  Placeholders
use the ``${NAME}`` form.
"""
from __future__ import annotations

import re
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .layout import Dialect


class TemplateId(Enum):
    SCENE_CONTEXT = "scene_context"
    OBJECT_CONTEXT = "object_context"
    IMAGE2D_CONTEXT = "image2d_context"
    VERIFY_MATCH = "verify_match"
    DESCRIBE_DETAIL = "describe_detail"
    UPDATE_WITH_FEEDBACK = "update_with_feedback"


class MissingBinding(Exception):
    """A placeholder required by the template was not bound."""


_PLACEHOLDER_RE = re.compile(r"\$\{([A-Z_]+)\}")

_CONTEXT_FOR_DIALECT = {
    Dialect.SCENE3D: TemplateId.SCENE_CONTEXT,
    Dialect.OBJECT_PARTS3D: TemplateId.OBJECT_CONTEXT,
    Dialect.IMAGE2D: TemplateId.IMAGE2D_CONTEXT,
}


@lru_cache(maxsize=None)
def template_body(template_id: TemplateId) -> str:
    path = resources.files(__package__).joinpath("prompts", template_id.value + ".txt")
    return path.read_text(encoding="utf-8")


def placeholders(template_id: TemplateId) -> frozenset[str]:
    return frozenset(_PLACEHOLDER_RE.findall(template_body(template_id)))


def render(template_id: TemplateId, bindings: Mapping[str, str] | None = None) -> str:
    """Substitute every placeholder in one pass; bound values are inserted verbatim."""
    bindings = bindings or {}
    missing = placeholders(template_id) - set(bindings)
    if missing:
        raise MissingBinding(
            f"{template_id.value}: unbound placeholder(s) {', '.join(sorted(missing))}"
        )
    return _PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], template_body(template_id))


def context_template_for(dialect: Dialect) -> TemplateId:
    return _CONTEXT_FOR_DIALECT[dialect]


def context_prompt(dialect: Dialect) -> str:
    return render(context_template_for(dialect))
