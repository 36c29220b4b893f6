"""Chat-completion gateway: transports, parsing repairs, and transcripts.

All model traffic flows through Gateway.complete. Structured replies go
through a repair ladder (parse as-is, strip code fences, extract the
first balanced object, finally re-ask citing the error) bounded by
RetryPolicy.max_repairs. Every exchange is fingerprinted over the
template id, the rendered prompt, and the model parameters; transcripts
keyed by fingerprint let a run be recorded once and replayed later with
no endpoint at all, byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol

import requests

from .errors import (
    BudgetExceededError,
    ParseFailedError,
    TranscriptCorruptError,
    TranscriptMissError,
    TransportError,
)
from .prompts import PromptTemplate, ResponseFormat, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    model: str
    temperature: float = 0.0
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {"model": self.model, "temperature": self.temperature, "seed": self.seed}


@dataclass(frozen=True)
class RetryPolicy:
    """How many corrective re-asks a failing parse is allowed."""

    max_repairs: int = 2


class Transport(Protocol):
    def complete(self, template_id: str, prompt: str, params: ModelParams) -> str: ...


class HttpTransport:
    """OpenAI-style chat completions endpoint over HTTP."""

    def __init__(self, base_url: str, api_key: str = "", timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, template_id: str, prompt: str, params: ModelParams) -> str:
        payload: dict = {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"endpoint returned {resp.status_code}: {resp.text[:500]}")
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise TransportError("completion content is not text")
        return content


def fingerprint(template_id: str, prompt: str, params: ModelParams) -> str:
    """Stable identity of one exchange: template, rendered prompt, params."""
    canonical = json.dumps(
        {
            "template_id": template_id,
            "prompt": prompt,
            "model": params.model,
            "temperature": params.temperature,
            "seed": params.seed,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class TranscriptMode(Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


def load_transcript(path: Path) -> dict[str, str]:
    """Load a transcript file into a fingerprint -> response map.

    Exact duplicate entries collapse; two different responses for one
    fingerprint mean the file is corrupt.
    """
    responses: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TranscriptCorruptError(f"cannot read transcript {path}: {exc}") from exc
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            fp = entry["fingerprint"]
            response = entry["response"]
        except (ValueError, KeyError, TypeError) as exc:
            raise TranscriptCorruptError(f"{path}:{n}: bad entry: {exc}") from exc
        if fp in responses and responses[fp] != response:
            raise TranscriptCorruptError(
                f"{path}:{n}: conflicting responses for fingerprint {fp}"
            )
        responses[fp] = response
    return responses


@dataclass(frozen=True)
class Reply:
    """Outcome of one gateway call: raw text plus parsed object when structured."""

    text: str
    data: Optional[dict]
    fingerprint: str
    exchanges: int


class Gateway:
    """Single entry point for model calls, in live, record, or replay mode."""

    def __init__(
        self,
        params: ModelParams,
        transport: Optional[Transport] = None,
        mode: TranscriptMode = TranscriptMode.LIVE,
        transcript_path: Optional[Path] = None,
        retry: RetryPolicy = RetryPolicy(),
        max_calls: Optional[int] = None,
    ):
        if mode is not TranscriptMode.REPLAY and transport is None:
            raise ValueError(f"{mode.value} mode needs a transport")
        if mode is not TranscriptMode.LIVE and transcript_path is None:
            raise ValueError(f"{mode.value} mode needs a transcript path")
        self.params = params
        self.transport = transport
        self.mode = mode
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self.retry = retry
        self.max_calls = max_calls
        self.calls = 0
        self._replay: dict[str, str] = (
            load_transcript(self.transcript_path) if mode is TranscriptMode.REPLAY else {}
        )

    def _exchange(self, template_id: str, prompt: str) -> tuple[str, str]:
        fp = fingerprint(template_id, prompt, self.params)
        if self.max_calls is not None and self.calls >= self.max_calls:
            raise BudgetExceededError(f"call budget of {self.max_calls} exhausted")
        self.calls += 1
        if self.mode is TranscriptMode.REPLAY:
            if fp not in self._replay:
                raise TranscriptMissError(fp)
            return self._replay[fp], fp
        response = self.transport.complete(template_id, prompt, self.params)
        if self.mode is TranscriptMode.RECORD:
            entry = {"fingerprint": fp, "template_id": template_id, "response": response}
            with open(self.transcript_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return response, fp

    def exchange_text(self, template_id: str, prompt: str) -> tuple[str, str]:
        """One raw exchange; returns (response text, fingerprint)."""
        return self._exchange(template_id, prompt)

    def exchange_structured(
        self, template_id: str, prompt: str, expected_keys: tuple[str, ...]
    ) -> tuple[dict, str]:
        """One structured exchange through the repair ladder.

        Returns (parsed object, raw text of the reply that parsed).
        """
        reply = self._run_ladder(template_id, prompt, expected_keys)
        return reply.data, reply.text

    def _run_ladder(
        self, template_id: str, prompt: str, expected_keys: tuple[str, ...]
    ) -> Reply:
        attempt_text, fp = self._exchange(template_id, prompt)
        exchanges = 1
        last_error = ""
        for attempt in range(self.retry.max_repairs + 1):
            data, error = _parse_structured(attempt_text, expected_keys)
            if data is not None:
                return Reply(text=attempt_text, data=data, fingerprint=fp, exchanges=exchanges)
            last_error = error
            if attempt == self.retry.max_repairs:
                break
            logger.info("%s: reply unusable (%s), re-asking", template_id, error)
            repair_prompt = (
                f"{prompt}\n\n"
                f"Your previous reply could not be used: {error}\n"
                f"Previous reply:\n{attempt_text}\n\n"
                f"Reply again following the required format exactly."
            )
            attempt_text, _ = self._exchange(template_id, repair_prompt)
            exchanges += 1
        raise ParseFailedError(
            f"{template_id}: {last_error} after {self.retry.max_repairs} repairs",
            raw=attempt_text,
        )

    def complete(self, template: PromptTemplate, bindings: dict[str, str]) -> Reply:
        """Render, send, and (for structured templates) parse with repairs."""
        prompt = render_prompt(template, bindings)
        if template.response_format is not ResponseFormat.STRUCTURED_OBJECT:
            text, fp = self._exchange(template.id, prompt)
            return Reply(text=text, data=None, fingerprint=fp, exchanges=1)
        return self._run_ladder(template.id, prompt, template.expected_keys)

    def ask_text(self, template: PromptTemplate, bindings: dict[str, str]) -> str:
        return self.complete(template, bindings).text

    def ask_structured(self, template: PromptTemplate, bindings: dict[str, str]) -> dict:
        return self.complete(template, bindings).data


def strip_code_fences(text: str) -> str:
    """Drop a surrounding markdown code fence if one wraps the text."""
    stripped = text.strip()
    if not stripped.startswith("```"):
        return text
    lines = stripped.splitlines()
    if len(lines) < 2:
        return text
    # first line is ``` or ```json; closing fence may be the last line
    if lines[-1].strip() == "```":
        return "\n".join(lines[1:-1])
    return "\n".join(lines[1:])


def first_balanced_object(text: str) -> Optional[str]:
    """Extract the first balanced {...} region, respecting string literals."""
    start = text.find("{")
    if start == -1:
        return None
    depth = 0
    in_string = False
    escape = False
    for k in range(start, len(text)):
        ch = text[k]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:k + 1]
    return None


def _parse_structured(text: str, expected_keys: tuple[str, ...]) -> tuple[Optional[dict], str]:
    """Run the local rungs of the repair ladder. Returns (data, error)."""
    candidates = [text, strip_code_fences(text)]
    balanced = first_balanced_object(text)
    if balanced is not None:
        candidates.append(balanced)
    error = "no JSON object found"
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except ValueError as exc:
            error = f"invalid JSON: {exc}"
            continue
        if not isinstance(data, dict):
            error = "top-level JSON value is not an object"
            continue
        missing = [k for k in expected_keys if k not in data]
        if missing:
            error = f"missing required keys: {', '.join(missing)}"
            continue
        return data, ""
    return None, error
