#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from the real service API.

Runs the HTTP service in-process with the deterministic scripted backend
used by the Python test suite, drives a full session (clustering, schema
induction, generation, contrast, alignment, review, iteration), and saves
the exact JSON the service returned at two points:

  test/fixtures/session_before.json  after contrast + alignment, with one
                                     pending ADD suggestion
  test/fixtures/session_after.json   after accepting that suggestion and
                                     running iterate (revision 1 exists)

Run from the repository root:

  PYTHONPATH=tests python3 frontend/scripts/capture_fixtures.py
"""

import json
import re
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from schemex.gateway import Gateway, ModelParams
from schemex.service import create_app

from test_acceptance import (
    RouterTransport,
    WALKTHROUGH_CORPUS,
    WALKTHROUGH_GOAL,
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "test" / "fixtures"
DIMENSIONS_C1 = ("Problem Setting", "Core Claim", "Findings", "Implications")
INVALID_SEGMENTS = json.dumps({"segments": [], "dimension_analysis": {}})


def sentence_spans(text):
    spans = []
    start = 0
    for match in re.finditer(r"[.!?]+(?:\s+|$)", text):
        spans.append((start, match.end()))
        start = match.end()
    if start < len(text):
        spans.append((start, len(text)))
    return spans


def aligned_reply(generated, gold):
    """A valid segment map: gold sentences labeled with the c1 dimensions."""
    segments = [
        {
            "id": "gen-1",
            "source": "generated",
            "start_index": 0,
            "end_index": len(generated),
            "text": generated,
            "dimension": "Core Claim",
            "annotation": "Single-sentence composition standing in for the claim.",
            "importance": "high",
        }
    ]
    for index, (start, end) in enumerate(sentence_spans(gold)):
        segments.append(
            {
                "id": f"gold-{index + 1}",
                "source": "gold",
                "start_index": start,
                "end_index": end,
                "text": gold[start:end],
                "dimension": DIMENSIONS_C1[index % len(DIMENSIONS_C1)],
                "annotation": f"Reference sentence {index + 1}.",
                "importance": "medium",
            }
        )
    return json.dumps(
        {
            "segments": segments,
            "dimension_analysis": {
                "Findings": "The reference isolates its finding in one sentence."
            },
        }
    )


class CaptureTransport(RouterTransport):
    """Router backend plus an alignment route the walkthrough never needed.

    The record whose gold example is e1 gets a valid dimension-labeled map;
    the e2 record gets two unusable replies so the engine commits its
    sentence fallback, giving the frontend one fixture of each kind.
    """

    def complete(self, template_id, prompt, params):
        if template_id == "segment_alignment":
            gold_e1 = WALKTHROUGH_CORPUS[0][0]
            gold_e2 = WALKTHROUGH_CORPUS[1][0]
            if gold_e1 in prompt:
                match = re.search(
                    r"TEXT 1 \(Generated Output\): (.*?)\nTEXT 2 \(Gold Example\): ",
                    prompt,
                    re.S,
                )
                if match is None:
                    raise AssertionError("alignment prompt lacks the generated text")
                return aligned_reply(match.group(1), gold_e1)
            if gold_e2 in prompt:
                return INVALID_SEGMENTS
            raise AssertionError("alignment requested for an unexpected record")
        return super().complete(template_id, prompt, params)


def run_node(client, key, label):
    response = client.post(f"/sessions/walkthrough/nodes/{key}/run", json={})
    body = response.json()
    if response.status_code != 200 or body.get("status") != "Done":
        raise SystemExit(f"{label} failed: {response.status_code} {body}")


def main():
    factory = lambda: Gateway(
        params=ModelParams(model="fixture-model", temperature=0.0, seed=7),
        transport=CaptureTransport(),
    )
    data_dir = Path(tempfile.mkdtemp(prefix="schemex-fixtures-"))
    client = TestClient(create_app(data_dir=data_dir, gateway_factory=factory))

    created = client.post(
        "/sessions",
        json={
            "id": "walkthrough",
            "goal": WALKTHROUGH_GOAL,
            "content_type": "research paper abstract",
            "examples": [
                {"content": content, "input_context": context}
                for content, context in WALKTHROUGH_CORPUS
            ],
            "holdout_ratio": 0,
        },
    )
    if created.status_code != 201:
        raise SystemExit(f"session creation failed: {created.json()}")

    run_node(client, "cluster", "clustering")
    for cluster_id in ("c1", "c2", "c3"):
        for stage in ("feature_matrix", "dimensions", "attributes", "overall"):
            run_node(client, f"{stage}:{cluster_id}", f"{stage} {cluster_id}")
        run_node(client, f"apply:{cluster_id}-r0", f"apply {cluster_id}")

    session = client.get("/sessions/walkthrough").json()
    c1_records = sorted(
        record_id
        for record_id, record in session["records"].items()
        if record["schema_id"] == "c1-r0"
    )
    for record_id in c1_records:
        run_node(client, f"contrast:{record_id}", f"contrast {record_id}")
        run_node(client, f"align:{record_id}", f"align {record_id}")

    before = client.get("/sessions/walkthrough").json()
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    (FIXTURE_DIR / "session_before.json").write_text(
        json.dumps(before, indent=2, sort_keys=True) + "\n"
    )

    pending = [
        (record_id, suggestion["id"])
        for record_id, report in before["reports"].items()
        for suggestion in report["suggestions"]
        if suggestion["status"] == "pending"
    ]
    if len(pending) != 1:
        raise SystemExit(f"expected exactly one pending suggestion, found {pending}")
    record_id, suggestion_id = pending[0]
    reviewed = client.post(
        "/sessions/walkthrough/edits",
        json={
            "kind": "review",
            "target": record_id,
            "suggestion_id": suggestion_id,
            "action": {"kind": "Accept"},
        },
    )
    if reviewed.status_code != 200:
        raise SystemExit(f"review failed: {reviewed.json()}")
    run_node(client, "iterate:c1-r0", "iterate c1-r0")

    after = client.get("/sessions/walkthrough").json()
    (FIXTURE_DIR / "session_after.json").write_text(
        json.dumps(after, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {FIXTURE_DIR / 'session_before.json'}")
    print(f"wrote {FIXTURE_DIR / 'session_after.json'}")


if __name__ == "__main__":
    sys.exit(main())
