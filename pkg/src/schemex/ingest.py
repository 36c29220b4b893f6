"""Loading example sets from disk and describing non-text media.

A manifest is JSON: {"goal", "content_type"?, "entries": [{"path",
"modality", "input_context"?}]}. A bare directory of .txt files also
works, with an optional <name>.meta.json sidecar per file carrying its
input_context. Text is read verbatim as UTF-8 (unicode-composed, NFC);
images, video, and audio are turned into text through the gateway, and
the resulting examples are marked derived with their source kept.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import (
    DecodeError,
    DescriptionFailedError,
    EmptyDescriptionError,
    IngestFailedError,
    NoExamplesError,
    SchemexError,
    UnsupportedCodecError,
)
from .gateway import Gateway
from .model import Example, ExampleSet, Modality, new_example_set
from .prompts import PromptTemplate, ResponseFormat

logger = logging.getLogger(__name__)

VIDEO_FRAME_INTERVAL_SECONDS = 5
VIDEO_MAX_FRAMES = 20


@dataclass(frozen=True)
class IngestEntry:
    path: str
    modality: Modality
    input_context: str = ""

    def to_dict(self) -> dict:
        d: dict = {"path": self.path, "modality": self.modality.value}
        if self.input_context:
            d["input_context"] = self.input_context
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IngestEntry":
        try:
            modality = Modality(d["modality"])
        except ValueError as exc:
            raise IngestFailedError(f"unknown modality {d.get('modality')!r}") from exc
        return cls(
            path=d["path"],
            modality=modality,
            input_context=d.get("input_context", ""),
        )


@dataclass(frozen=True)
class IngestManifest:
    goal: str
    entries: tuple[IngestEntry, ...]
    content_type: str = ""
    input_context: str = ""

    def to_dict(self) -> dict:
        return {
            "goal": self.goal,
            "content_type": self.content_type,
            "input_context": self.input_context,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IngestManifest":
        return cls(
            goal=d["goal"],
            entries=tuple(IngestEntry.from_dict(e) for e in d.get("entries", [])),
            content_type=d.get("content_type", ""),
            input_context=d.get("input_context", ""),
        )


# Machine-side prompts for media preprocessing. These are engine plumbing,
# not part of the induction template set in prompts.TEMPLATES.

DESCRIBE_IMAGE = PromptTemplate(
    id="describe_image",
    response_format=ResponseFormat.FREE_TEXT,
    body=(
        "Describe the image at the following source so it can stand in for the "
        "image in a text-only structural analysis.\n"
        "Image source: {source}\n\n"
        "Cover the visual composition, any visible text, and how the elements are "
        "arranged. Output the description directly."
    ),
)

DESCRIBE_VIDEO_FRAMES = PromptTemplate(
    id="describe_video_frames",
    response_format=ResponseFormat.FREE_TEXT,
    body=(
        "Describe the visual content of the video at the following source, based "
        "on frames sampled every {interval_seconds} seconds (at most {max_frames} "
        "frames).\n"
        "Video source: {source}\n\n"
        "Describe what each sampled moment shows and how the visuals progress. "
        "Output the description directly."
    ),
)

TRANSCRIBE_AUDIO = PromptTemplate(
    id="transcribe_audio",
    response_format=ResponseFormat.FREE_TEXT,
    body=(
        "Transcribe the speech in the audio at the following source verbatim.\n"
        "Audio source: {source}\n\n"
        "Output only the transcript text."
    ),
)


def load_manifest(path: Path) -> IngestManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileNotFoundError(f"manifest not readable: {path}") from exc
    except ValueError as exc:
        raise IngestFailedError(f"manifest is not valid JSON: {exc}") from exc
    if "goal" not in data:
        raise IngestFailedError("manifest must declare a goal")
    manifest = IngestManifest.from_dict(data)
    # relative entry paths resolve against the manifest's directory
    resolved = tuple(
        IngestEntry(
            path=str((path.parent / e.path) if not Path(e.path).is_absolute() else Path(e.path)),
            modality=e.modality,
            input_context=e.input_context,
        )
        for e in manifest.entries
    )
    return IngestManifest(
        goal=manifest.goal,
        entries=resolved,
        content_type=manifest.content_type,
        input_context=manifest.input_context,
    )


def load_directory(directory: Path, goal: str, content_type: str = "") -> IngestManifest:
    """Build a manifest from every .txt file in a directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    entries = []
    for txt in sorted(directory.glob("*.txt")):
        sidecar = txt.with_name(txt.name + ".meta.json")
        context = ""
        if sidecar.exists():
            try:
                context = json.loads(sidecar.read_text(encoding="utf-8")).get(
                    "input_context", ""
                )
            except ValueError as exc:
                raise IngestFailedError(f"bad sidecar {sidecar}: {exc}") from exc
        entries.append(IngestEntry(path=str(txt), modality=Modality.TEXT, input_context=context))
    return IngestManifest(goal=goal, entries=tuple(entries), content_type=content_type)


def describe_media(entry: IngestEntry, gateway: Gateway) -> str:
    """Produce the textual stand-in for one non-text entry.

    Image: one description call. Audio: one transcription call. Video:
    a frame description call plus a transcription call, concatenated
    under fixed VISUAL:/TRANSCRIPT: labels so snippets stay findable.
    """
    if entry.modality is Modality.TEXT:
        raise UnsupportedCodecError("text entries are read directly, not described")
    if entry.modality is Modality.IMAGE:
        text = gateway.ask_text(DESCRIBE_IMAGE, {"source": entry.path}).strip()
    elif entry.modality is Modality.AUDIO:
        text = gateway.ask_text(TRANSCRIBE_AUDIO, {"source": entry.path}).strip()
    else:
        visual = gateway.ask_text(
            DESCRIBE_VIDEO_FRAMES,
            {
                "source": entry.path,
                "interval_seconds": str(VIDEO_FRAME_INTERVAL_SECONDS),
                "max_frames": str(VIDEO_MAX_FRAMES),
            },
        ).strip()
        transcript = gateway.ask_text(TRANSCRIBE_AUDIO, {"source": entry.path}).strip()
        if not visual or not transcript:
            raise EmptyDescriptionError(f"empty description for {entry.path}")
        text = f"VISUAL:\n{visual}\n\nTRANSCRIPT:\n{transcript}"
    if not text:
        raise EmptyDescriptionError(f"empty description for {entry.path}")
    return text


def _read_text_entry(entry: IngestEntry) -> str:
    path = Path(entry.path)
    if not path.exists():
        raise FileNotFoundError(f"example file not found: {path}")
    try:
        raw = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"{path} is not valid UTF-8: {exc}") from exc
    return unicodedata.normalize("NFC", raw)


def load_examples(
    manifest: IngestManifest,
    gateway: Optional[Gateway] = None,
    max_workers: int = 1,
) -> ExampleSet:
    """Read every entry and assemble the ExampleSet.

    Ids are assigned e1..en in manifest order, so the same manifest always
    produces the same set. Media entries may be described concurrently
    (max_workers > 1); assembly stays in manifest order regardless.
    """
    if not manifest.entries:
        raise NoExamplesError("manifest has no entries")

    def produce(entry: IngestEntry) -> tuple[str, bool]:
        if entry.modality is Modality.TEXT:
            return _read_text_entry(entry), False
        if gateway is None:
            raise DescriptionFailedError(entry.path, "no gateway available for media")
        if not Path(entry.path).exists():
            raise FileNotFoundError(f"media file not found: {entry.path}")
        try:
            return describe_media(entry, gateway), True
        except (UnsupportedCodecError, EmptyDescriptionError):
            raise
        except SchemexError as exc:
            raise DescriptionFailedError(entry.path, str(exc)) from exc

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            produced = list(pool.map(produce, manifest.entries))
    else:
        produced = [produce(e) for e in manifest.entries]

    examples = tuple(
        Example(
            id=f"e{i + 1}",
            content=content,
            input_context=entry.input_context,
            modality=entry.modality,
            source_uri=entry.path,
            derived=derived,
        )
        for i, (entry, (content, derived)) in enumerate(zip(manifest.entries, produced))
    )
    logger.info("loaded %d examples (%d derived)", len(examples),
                sum(1 for e in examples if e.derived))
    return new_example_set(
        goal=manifest.goal,
        examples=examples,
        content_type=manifest.content_type,
        input_context=manifest.input_context,
    )
