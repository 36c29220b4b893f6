"""Binding builders shared by the pipeline stages.

Every stage labels examples the same way ("Example <id>: ...") so models
echo engine ids back, and builds the optional input-context block with
one rule, so identical inputs always render identical prompts.
"""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .model import Example, ExampleSet, Judgment


def format_examples(examples: Iterable[Example]) -> str:
    return "\n\n".join(f"Example {e.id}:\n{e.content}" for e in examples)


def format_example_ids(examples: Iterable[Example]) -> str:
    return ", ".join(e.id for e in examples)


def format_input_context(
    example_set: ExampleSet, examples: Optional[Iterable[Example]] = None
) -> str:
    """The {input_context} block: empty, or a labeled addendum.

    Combines the set-level context with any per-example contexts among
    the examples actually shown. Returns "" when there is nothing to say,
    so the placeholder collapses cleanly.
    """
    chosen = list(examples) if examples is not None else list(example_set.examples)
    lines = []
    if example_set.input_context:
        lines.append(example_set.input_context)
    for e in chosen:
        if e.input_context:
            lines.append(f"Example {e.id}: {e.input_context}")
    if not lines:
        return ""
    return "\n\nInput context:\n" + "\n".join(lines)


_ID_TOKEN = re.compile(r"^(?:Example\s+)?\[?([A-Za-z]*\d+)\]?\.?$", re.IGNORECASE)


def normalize_example_id(token: str, known_ids: Iterable[str]) -> Optional[str]:
    """Map a model-echoed example reference back to an engine id.

    Accepts the id itself, an optional "Example " prefix, surrounding
    brackets, a trailing period, and bare numbers (mapped to e<n>).
    Returns None when the token cannot be resolved to a known id.
    """
    known = set(known_ids)
    token = token.strip()
    if token in known:
        return token
    m = _ID_TOKEN.match(token)
    if not m:
        return None
    core = m.group(1)
    if core in known:
        return core
    if core.isdigit() and f"e{core}" in known:
        return f"e{core}"
    lowered = core.lower()
    if lowered in known:
        return lowered
    return None


def parse_judgment(value) -> Optional[Judgment]:
    """Read a model-echoed Yes/Partial/No, any casing. None when unreadable."""
    lowered = str(value or "").strip().lower()
    if lowered == "yes":
        return Judgment.YES
    if lowered == "partial":
        return Judgment.PARTIAL
    if lowered == "no":
        return Judgment.NO
    return None
