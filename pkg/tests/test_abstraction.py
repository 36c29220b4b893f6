"""Tests for dimension/attribute inference, schema assembly, and schema edits."""

import json
import random

import pytest

from schemex.abstraction import (
    AddAttribute,
    RemoveAttribute,
    RemoveDimension,
    RenameAttribute,
    RenameDimension,
    apply_schema_edit,
    assemble_schema,
    category_warnings,
    infer_dimension_attributes,
    infer_dimensions,
    infer_overall_attributes,
    matrix_with_placeholder_column,
    schema_edit_from_dict,
)
from schemex.errors import (
    DuplicateConciseError,
    IncompleteMatrixError,
    NoExamplesError,
    ParallelArrayMismatchError,
    UnknownTargetError,
)
from schemex.gateway import Gateway, ModelParams
from schemex.model import (
    Attribute,
    Cluster,
    Dimension,
    EvidenceCell,
    EvidenceMatrix,
    Judgment,
    Schema,
    Verification,
    new_example_set,
    text_examples,
)

PARAMS = ModelParams(model="test-model", temperature=0.0, seed=7)


class ScriptedTransport:
    """Returns queued responses in order; records every exchange."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.seen = []

    def complete(self, template_id, prompt, params):
        self.seen.append((template_id, prompt))
        return self.responses.pop(0)


def make_gateway(responses):
    return Gateway(params=PARAMS, transport=ScriptedTransport(responses))


def make_set():
    return new_example_set(
        "Summarize research abstracts",
        text_examples([
            ("The study surveyed 300 nurses about workload. Findings suggest burnout.", ""),
            ("We propose a formal model of trust. The theory extends prior work.", ""),
            ("A field experiment with 40 teams measured output under deadlines.", ""),
            ("This essay reviews policy debates and offers a synthesis.", ""),
        ]),
        content_type="abstract summaries",
    )


def cluster_of(ids, name="Empirical Studies"):
    return Cluster(id="c1", name=name, common_features=("data",), member_ids=tuple(ids))


def application(dimension, applies, snippet="", explanation="fits"):
    return {
        "dimension": dimension,
        "applies": applies,
        "explanation": explanation,
        "snippet": snippet,
    }


def dimensions_reply(mappings, names=("Study Design", "Findings")):
    return json.dumps(
        {
            "dimensions": [
                {"name": n, "description": f"{n} of the work", "examples": []}
                for n in names
            ],
            "example_mappings": mappings,
        }
    )


# --- infer_dimensions ---------------------------------------------------------


def test_infer_dimensions_assigns_ids_and_verifies_snippets():
    es = make_set()
    reply = dimensions_reply(
        [
            {
                "example_id": "e1",
                "dimension_applications": [
                    application("Study Design", "Yes", "surveyed 300 nurses"),
                    application("Findings", "Yes", "Findings suggest burnout."),
                ],
            },
            {
                "example_id": "e3",
                "dimension_applications": [
                    application("Study Design", "Yes", "A field experiment with 40 teams"),
                    application("Findings", "No"),
                ],
            },
        ]
    )
    result = infer_dimensions(cluster_of(["e1", "e3"]), es, make_gateway([reply]))
    assert [d.id for d in result.dimensions] == ["d1", "d2"]
    assert [d.name for d in result.dimensions] == ["Study Design", "Findings"]
    assert result.matrix.row_ids == ("e1", "e3")
    assert result.matrix.column_ids == ("d1", "d2")
    assert result.matrix.column_labels == ("Study Design", "Findings")
    cell = result.matrix.cell("e1", "d1")
    assert cell.judgment is Judgment.YES
    assert cell.verification is Verification.VERIFIED
    start, end = cell.verified_span
    assert es.by_id("e1").content[start:end] == "surveyed 300 nurses"
    assert result.matrix.cell("e3", "d2").judgment is Judgment.NO
    assert result.report.verified == 3


def test_infer_dimensions_yes_without_snippet_becomes_partial():
    es = make_set()
    reply = dimensions_reply(
        [
            {
                "example_id": "e1",
                "dimension_applications": [
                    application("Study Design", "Yes", snippet=""),
                    application("Findings", "Partial"),
                ],
            }
        ],
    )
    result = infer_dimensions(cluster_of(["e1"]), es, make_gateway([reply]))
    assert result.matrix.cell("e1", "d1").judgment is Judgment.PARTIAL


def test_infer_dimensions_fabricated_snippet_downgrades_when_strict():
    es = make_set()
    reply = dimensions_reply(
        [
            {
                "example_id": "e1",
                "dimension_applications": [
                    application("Study Design", "Yes", "text that is not in the example"),
                    application("Findings", "No"),
                ],
            }
        ],
    )
    strict = infer_dimensions(cluster_of(["e1"]), es, make_gateway([reply]))
    cell = strict.matrix.cell("e1", "d1")
    assert cell.judgment is Judgment.PARTIAL
    assert cell.verification is Verification.UNVERIFIABLE
    assert strict.report.downgraded == (("e1", "d1"),)

    lenient = infer_dimensions(cluster_of(["e1"]), es, make_gateway([reply]), strict=False)
    assert lenient.matrix.cell("e1", "d1").judgment is Judgment.YES


def test_infer_dimensions_reask_fills_missing_cells():
    es = make_set()
    first = dimensions_reply(
        [
            {
                "example_id": "e1",
                "dimension_applications": [
                    application("Study Design", "Yes", "surveyed 300 nurses"),
                    application("Findings", "Partial"),
                ],
            },
            {
                "example_id": "e3",
                "dimension_applications": [application("Study Design", "Partial")],
            },
        ]
    )
    second = dimensions_reply(
        [
            {
                "example_id": "e3",
                "dimension_applications": [
                    application("Study Design", "No"),
                    application("Findings", "No"),
                ],
            }
        ]
    )
    transport = ScriptedTransport([first, second])
    gw = Gateway(params=PARAMS, transport=transport)
    result = infer_dimensions(cluster_of(["e1", "e3"]), es, gw)
    assert len(transport.seen) == 2
    assert "(e3, Findings)" in transport.seen[1][1]
    # the first reply's judgment wins where both replies cover a cell
    assert result.matrix.cell("e3", "d1").judgment is Judgment.PARTIAL
    assert result.matrix.cell("e3", "d2").judgment is Judgment.NO


def test_infer_dimensions_fails_after_incomplete_reask():
    es = make_set()
    partial = dimensions_reply(
        [
            {
                "example_id": "e1",
                "dimension_applications": [application("Study Design", "Partial")],
            }
        ]
    )
    with pytest.raises(IncompleteMatrixError) as err:
        infer_dimensions(cluster_of(["e1"]), es, make_gateway([partial, partial]))
    assert "e1/d2" in str(err.value)


def test_infer_dimensions_requires_dimensions_and_members():
    es = make_set()
    empty = json.dumps({"dimensions": [], "example_mappings": []})
    with pytest.raises(IncompleteMatrixError):
        infer_dimensions(cluster_of(["e1"]), es, make_gateway([empty]))
    with pytest.raises(NoExamplesError):
        infer_dimensions(cluster_of([]), es, make_gateway([]))


# --- infer_dimension_attributes ----------------------------------------------


def attr_entry(example_id, classification, quote="", explanation="why"):
    return {
        "example_id": example_id,
        "quote": quote,
        "explanation": explanation,
        "classification": classification,
    }


def test_dimension_attributes_builds_matrices_per_dimension():
    es = make_set()
    dims = (Dimension("d1", "Study Design", "how the study ran"),)
    reply = json.dumps(
        {
            "dimensions": {
                "Study Design": {
                    "detailed": [
                        "Names the population that was studied",
                        "States the measurement method",
                    ],
                    "concise": ["Population", "Measurement"],
                }
            },
            "attributes_examples": {
                "Study Design": {
                    "Names the population that was studied": [
                        attr_entry("e1", "YES", "300 nurses"),
                        attr_entry("e3", "YES", "40 teams"),
                    ],
                    "States the measurement method": [
                        attr_entry("e1", "YES", "surveyed"),
                        attr_entry("e3", "PARTIAL"),
                    ],
                }
            },
        }
    )
    result = infer_dimension_attributes(cluster_of(["e1", "e3"]), es, dims, make_gateway([reply]))
    assert [a.concise for a in result.attributes["d1"]] == ["Population", "Measurement"]
    matrix = result.matrices["d1"]
    assert matrix.column_ids == ("Population", "Measurement")
    assert matrix.cell("e1", "Population").judgment is Judgment.YES
    assert matrix.cell("e1", "Population").verification is Verification.VERIFIED
    assert matrix.cell("e3", "Measurement").judgment is Judgment.PARTIAL
    assert result.dropped == ()
    assert result.support["d1"].columns["Population"].ratio == 1.0


def test_dimension_attributes_parallel_arrays_must_match():
    es = make_set()
    dims = (Dimension("d1", "Study Design", "how"),)
    reply = json.dumps(
        {
            "dimensions": {
                "Study Design": {"detailed": ["one", "two"], "concise": ["One"]}
            },
            "attributes_examples": {},
        }
    )
    with pytest.raises(ParallelArrayMismatchError) as err:
        infer_dimension_attributes(cluster_of(["e1"]), es, dims, make_gateway([reply]))
    assert err.value.scope == "Study Design"
    assert (err.value.n_detailed, err.value.n_concise) == (2, 1)


def test_dimension_attributes_drops_unsupported_columns_when_strict():
    es = make_set()
    dims = (Dimension("d1", "Study Design", "how"),)
    # Popular: 2/4 supported (ratio 0.5, kept). Rare: 1/4 (0.25, dropped).
    reply = json.dumps(
        {
            "dimensions": {
                "Study Design": {
                    "detailed": ["Often present", "Rarely present"],
                    "concise": ["Popular", "Rare"],
                }
            },
            "attributes_examples": {
                "Study Design": {
                    "Often present": [
                        attr_entry("e1", "YES", "surveyed"),
                        attr_entry("e2", "PARTIAL"),
                        attr_entry("e3", "NO"),
                        attr_entry("e4", "NO"),
                    ],
                    "Rarely present": [
                        attr_entry("e1", "PARTIAL"),
                        attr_entry("e2", "NO"),
                        attr_entry("e3", "NO"),
                        attr_entry("e4", "NO"),
                    ],
                }
            },
        }
    )
    members = ["e1", "e2", "e3", "e4"]
    strict = infer_dimension_attributes(cluster_of(members), es, dims, make_gateway([reply]))
    assert [a.concise for a in strict.attributes["d1"]] == ["Popular"]
    assert strict.matrices["d1"].column_ids == ("Popular",)
    assert strict.dropped == (("d1", "Rare", 0.25),)

    lenient = infer_dimension_attributes(
        cluster_of(members), es, dims, make_gateway([reply]), strict=False
    )
    assert [a.concise for a in lenient.attributes["d1"]] == ["Popular", "Rare"]
    assert lenient.dropped == ()


def test_dimension_attributes_support_matches_tally_oracle():
    es = make_set()
    dims = (Dimension("d1", "Study Design", "how"),)
    members = ["e1", "e2", "e3", "e4"]
    rng = random.Random(41)
    for _ in range(30):
        judged = {m: rng.choice(["YES", "PARTIAL", "NO"]) for m in members}
        entries = [
            attr_entry(m, label, quote="surveyed" if label == "YES" and m == "e1" else "")
            for m, label in judged.items()
        ]
        reply = json.dumps(
            {
                "dimensions": {
                    "Study Design": {"detailed": ["Some detail"], "concise": ["Attr"]}
                },
                "attributes_examples": {"Study Design": {"Some detail": entries}},
            }
        )
        result = infer_dimension_attributes(
            cluster_of(members), es, dims, make_gateway([reply]), strict=False
        )
        # oracle: YES without a verifiable quote counts as PARTIAL
        supported = sum(
            1
            for m, label in judged.items()
            if label in ("YES", "PARTIAL")
        )
        expected = supported / len(members)
        assert result.support["d1"].columns["Attr"].ratio == pytest.approx(expected)


def test_dimension_attributes_reask_completes_matrix():
    es = make_set()
    dims = (Dimension("d1", "Study Design", "how"),)
    first = json.dumps(
        {
            "dimensions": {
                "Study Design": {"detailed": ["Some detail"], "concise": ["Attr"]}
            },
            "attributes_examples": {
                "Study Design": {"Some detail": [attr_entry("e1", "YES", "surveyed")]}
            },
        }
    )
    second = json.dumps(
        {
            "dimensions": {
                "Study Design": {"detailed": ["Some detail"], "concise": ["Attr"]}
            },
            "attributes_examples": {
                "Study Design": {"Some detail": [attr_entry("e3", "NO")]}
            },
        }
    )
    transport = ScriptedTransport([first, second])
    gw = Gateway(params=PARAMS, transport=transport)
    result = infer_dimension_attributes(cluster_of(["e1", "e3"]), es, dims, gw)
    assert len(transport.seen) == 2
    assert "(e3, Study Design: Attr)" in transport.seen[1][1]
    assert result.matrices["d1"].cell("e3", "Attr").judgment is Judgment.NO


# --- infer_overall_attributes --------------------------------------------------


def overall_reply(detailed, concise, entries_by_detailed):
    return json.dumps(
        {
            "overall_attributes": {"detailed": detailed, "concise": concise},
            "overall_attributes_examples": entries_by_detailed,
        }
    )


def test_overall_attributes_with_both_categories_has_no_warnings():
    es = make_set()
    reply = overall_reply(
        ["Roughly 150 to 250 words long", "Moves from setup to findings in order"],
        ["Word Count Range", "Sequential Organization"],
        {
            "Roughly 150 to 250 words long": [
                attr_entry("e1", "PARTIAL"),
                attr_entry("e3", "PARTIAL"),
            ],
            "Moves from setup to findings in order": [
                attr_entry("e1", "YES", "Findings suggest burnout."),
                attr_entry("e3", "PARTIAL"),
            ],
        },
    )
    result = infer_overall_attributes(cluster_of(["e1", "e3"]), es, make_gateway([reply]))
    assert [a.concise for a in result.attributes] == [
        "Word Count Range",
        "Sequential Organization",
    ]
    assert result.warnings == ()
    assert result.matrix.cell("e1", "Sequential Organization").verification is (
        Verification.VERIFIED
    )


def test_overall_attributes_warn_when_categories_missing():
    es = make_set()
    reply = overall_reply(
        ["Uses a confident tone"],
        ["Confident Tone"],
        {"Uses a confident tone": [attr_entry("e1", "PARTIAL")]},
    )
    result = infer_overall_attributes(cluster_of(["e1"]), es, make_gateway([reply]))
    assert len(result.warnings) == 2
    assert any("length or format" in w for w in result.warnings)
    assert any("organization" in w for w in result.warnings)


def test_category_warnings_keyword_heuristic():
    def attrs(*concises):
        return tuple(Attribute(c.lower(), c) for c in concises)

    assert category_warnings(attrs("Word Count", "Flow")) == ()
    assert category_warnings(attrs("Paragraph Structure",)) == ()  # structure hits both
    assert len(category_warnings(attrs("Tone", "Voice"))) == 2
    assert len(category_warnings(attrs("Sentence Length"))) == 1


def test_overall_attributes_reask_completes_matrix():
    es = make_set()
    first = overall_reply(
        ["Short format"],
        ["Short Format"],
        {"Short format": [attr_entry("e1", "PARTIAL")]},
    )
    second = overall_reply(
        ["Short format"],
        ["Short Format"],
        {"Short format": [attr_entry("e3", "NO")]},
    )
    transport = ScriptedTransport([first, second])
    gw = Gateway(params=PARAMS, transport=transport)
    result = infer_overall_attributes(cluster_of(["e1", "e3"]), es, gw)
    assert len(transport.seen) == 2
    assert result.matrix.cell("e3", "Short Format").judgment is Judgment.NO


# --- assemble_schema -----------------------------------------------------------


def build_schema(cluster_members=("e1", "e3")):
    es = make_set()
    cluster = cluster_of(cluster_members)
    dim_reply = dimensions_reply(
        [
            {
                "example_id": m,
                "dimension_applications": [
                    application("Study Design", "Partial"),
                    application("Findings", "Partial"),
                ],
            }
            for m in cluster_members
        ]
    )
    attr_reply = json.dumps(
        {
            "dimensions": {
                "Study Design": {
                    "detailed": ["Names the population"],
                    "concise": ["Population"],
                },
                "Findings": {
                    "detailed": ["States a takeaway"],
                    "concise": ["Takeaway"],
                },
            },
            "attributes_examples": {
                "Study Design": {
                    "Names the population": [
                        attr_entry(m, "PARTIAL") for m in cluster_members
                    ]
                },
                "Findings": {
                    "States a takeaway": [
                        attr_entry(m, "PARTIAL") for m in cluster_members
                    ]
                },
            },
        }
    )
    overall = overall_reply(
        ["About two sentences", "Setup before findings"],
        ["Two Sentence Length", "Setup Then Findings Order"],
        {
            "About two sentences": [attr_entry(m, "PARTIAL") for m in cluster_members],
            "Setup before findings": [attr_entry(m, "PARTIAL") for m in cluster_members],
        },
    )
    gw = make_gateway([dim_reply, attr_reply, overall])
    di = infer_dimensions(cluster, es, gw)
    ai = infer_dimension_attributes(cluster, es, di.dimensions, gw)
    oi = infer_overall_attributes(cluster, es, gw)
    return assemble_schema(cluster, di, ai, oi)


def test_assemble_schema_is_revision_zero():
    schema = build_schema()
    assert schema.id == "c1-r0"
    assert schema.cluster_id == "c1"
    assert schema.revision == 0
    assert schema.parent_id is None
    assert [d.id for d in schema.dimensions] == ["d1", "d2"]
    assert set(schema.attribute_matrices) == {"d1", "d2"}
    assert schema.overall_matrix is not None
    assert schema.overall_matrix.column_ids == (
        "Two Sentence Length",
        "Setup Then Findings Order",
    )
    assert schema.dimension_matrix.row_ids == ("e1", "e3")
    assert [a.concise for a in schema.attributes_for("d1")] == ["Population"]
    assert [a.concise for a in schema.overall_attributes] == [
        "Two Sentence Length",
        "Setup Then Findings Order",
    ]


# --- apply_schema_edit ----------------------------------------------------------


def test_rename_attribute_rekeys_matrix_and_keeps_cells():
    schema = build_schema()
    before = schema.attribute_matrices["d1"].cell("e1", "Population")
    edited = apply_schema_edit(
        schema, RenameAttribute("d1", "Population", "Focal Community")
    )
    assert edited.revision == schema.revision
    assert edited.id == schema.id
    assert [a.concise for a in edited.attributes_for("d1")] == ["Focal Community"]
    matrix = edited.attribute_matrices["d1"]
    assert matrix.column_ids == ("Focal Community",)
    assert matrix.column_labels == ("Focal Community",)
    assert matrix.cell("e1", "Focal Community") == before
    # detailed text preserved unless replaced
    assert edited.attributes_for("d1")[0].detailed == "Names the population"
    with_detail = apply_schema_edit(
        schema,
        RenameAttribute("d1", "Population", "Focal Community", "Names the focal community"),
    )
    assert with_detail.attributes_for("d1")[0].detailed == "Names the focal community"


def test_rename_attribute_errors():
    schema = build_schema()
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(schema, RenameAttribute("d9", "Population", "X"))
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(schema, RenameAttribute("d1", "Missing", "X"))
    schema2 = apply_schema_edit(schema, AddAttribute("d1", "another", "Other"))
    with pytest.raises(DuplicateConciseError):
        apply_schema_edit(schema2, RenameAttribute("d1", "Population", "Other"))


def test_add_attribute_creates_unchecked_column():
    schema = build_schema()
    edited = apply_schema_edit(
        schema, AddAttribute("d2", "Mentions theoretical integration", "Theoretical Integration")
    )
    added = [a for a in edited.attributes_for("d2") if a.concise == "Theoretical Integration"]
    assert len(added) == 1
    matrix = edited.attribute_matrices["d2"]
    assert matrix.column_ids[-1] == "Theoretical Integration"
    for row in matrix.row_ids:
        cell = matrix.cell(row, "Theoretical Integration")
        assert cell.judgment is None
        assert cell.verification is Verification.UNCHECKED
    with pytest.raises(DuplicateConciseError):
        apply_schema_edit(edited, AddAttribute("d2", "again", "Theoretical Integration"))
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(schema, AddAttribute("nope", "x", "X"))


def test_add_overall_attribute():
    schema = build_schema()
    edited = apply_schema_edit(schema, AddAttribute("overall", "Uses headers", "Headers"))
    assert [a.concise for a in edited.overall_attributes][-1] == "Headers"
    assert edited.overall_matrix.column_ids[-1] == "Headers"


def test_remove_attribute_drops_column_and_empty_matrix():
    schema = build_schema()
    edited = apply_schema_edit(schema, RemoveAttribute("d1", "Population"))
    assert edited.attributes_for("d1") == ()
    assert "d1" not in edited.attribute_matrices
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(edited, RemoveAttribute("d1", "Population"))

    two = apply_schema_edit(schema, AddAttribute("overall", "Uses headers", "Headers"))
    dropped_one = apply_schema_edit(two, RemoveAttribute("overall", "Two Sentence Length"))
    assert [a.concise for a in dropped_one.overall_attributes] == [
        "Setup Then Findings Order",
        "Headers",
    ]
    assert dropped_one.overall_matrix.column_ids == (
        "Setup Then Findings Order",
        "Headers",
    )


def test_rename_dimension_updates_label_not_id():
    schema = build_schema()
    edited = apply_schema_edit(schema, RenameDimension("d1", "Research Setup"))
    assert edited.dimension_by_id("d1").name == "Research Setup"
    idx = edited.dimension_matrix.column_ids.index("d1")
    assert edited.dimension_matrix.column_labels[idx] == "Research Setup"
    assert "d1" in edited.attribute_matrices
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(schema, RenameDimension("d9", "X"))
    with pytest.raises(DuplicateConciseError):
        apply_schema_edit(schema, RenameDimension("d1", "Findings"))


def test_remove_dimension_cascades():
    schema = build_schema()
    edited = apply_schema_edit(schema, RemoveDimension("d1"))
    assert [d.id for d in edited.dimensions] == ["d2"]
    assert "d1" not in edited.attribute_matrices
    assert edited.dimension_matrix.column_ids == ("d2",)
    with pytest.raises(UnknownTargetError):
        apply_schema_edit(edited, RemoveDimension("d1"))


def test_schema_edit_dict_roundtrip():
    edits = [
        RenameAttribute("d1", "A", "B", "detail"),
        RenameAttribute("overall", "A", "B"),
        AddAttribute("d2", "detail", "C"),
        RemoveAttribute("overall", "C"),
        RenameDimension("d1", "New Name"),
        RemoveDimension("d2"),
    ]
    for edit in edits:
        assert schema_edit_from_dict(edit.to_dict()) == edit


def test_matrix_placeholder_column_rejects_judged_cells_invariant():
    matrix = EvidenceMatrix(
        row_ids=("e1",),
        column_ids=("A",),
        column_labels=("A",),
        cells={("e1", "A"): EvidenceCell(judgment=Judgment.NO)},
    )
    added = matrix_with_placeholder_column(matrix, "B", "B")
    assert added.cell("e1", "B").judgment is None


def random_edit(rng, schema):
    """Pick a random applicable edit for the fuzz loop, or None."""
    choices = []
    scopes = ["overall"] + [d.id for d in schema.dimensions]
    for scope in scopes:
        attrs = schema.attributes_for(scope)
        labels = {a.concise for a in attrs}
        for a in attrs:
            new_name = f"R{rng.randrange(1000)}"
            if new_name not in labels:
                choices.append(RenameAttribute(scope, a.concise, new_name))
            choices.append(RemoveAttribute(scope, a.concise))
        new_label = f"A{rng.randrange(1000)}"
        if new_label not in labels:
            choices.append(AddAttribute(scope, f"detail {new_label}", new_label))
    names = {d.name for d in schema.dimensions}
    for d in schema.dimensions:
        new_name = f"Dim {rng.randrange(1000)}"
        if new_name not in names:
            choices.append(RenameDimension(d.id, new_name))
        if len(schema.dimensions) > 1:
            choices.append(RemoveDimension(d.id))
    return rng.choice(choices) if choices else None


def test_edit_sequences_preserve_schema_invariants_fuzz():
    rng = random.Random(97)
    for _ in range(200):
        schema = build_schema()
        for _ in range(rng.randrange(1, 7)):
            edit = random_edit(rng, schema)
            if edit is None:
                break
            schema = apply_schema_edit(schema, edit)
            # the Schema constructor re-runs every structural invariant;
            # re-building from public fields must succeed
            rebuilt = Schema(
                id=schema.id,
                cluster_id=schema.cluster_id,
                revision=schema.revision,
                parent_id=schema.parent_id,
                dimensions=schema.dimensions,
                overall_attributes=schema.overall_attributes,
                dimension_matrix=schema.dimension_matrix,
                attribute_matrices=schema.attribute_matrices,
                overall_matrix=schema.overall_matrix,
            )
            assert rebuilt == schema
            matrices = list(schema.attribute_matrices.values())
            for maybe in (schema.dimension_matrix, schema.overall_matrix):
                if maybe is not None:
                    matrices.append(maybe)
            for matrix in matrices:
                assert len(matrix.cells) == len(matrix.row_ids) * len(matrix.column_ids)
        assert schema.revision == 0
