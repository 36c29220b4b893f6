"""Evidence validator tests.

Each validator is checked against an independent oracle: verbatim search
against a naive normalize-both-and-scan, the partition check against a
multiset counter, the support rule against exhaustive tallies, and the
segment check against a character occupancy array.
"""

import itertools
import random
import re
import unicodedata
from collections import Counter

import pytest

from schemex.errors import EmptySnippetError, UnknownRowIdError
from schemex.evidence import (
    NormalizationPolicy,
    check_partition,
    check_segment_map,
    check_support,
    find_verbatim,
    normalize,
    sentence_spans,
    verify_matrix,
)
from schemex.model import (
    Cluster,
    Clustering,
    EvidenceCell,
    EvidenceMatrix,
    Judgment,
    Segment,
    SegmentMap,
    SegmentSource,
    Verification,
)


# --- normalization and verbatim search -----------------------------------------


def naive_norm(text):
    # independent oracle: full-string NFC, straighten quotes, squash whitespace
    text = unicodedata.normalize("NFC", text)
    for curly, straight in [("‘", "'"), ("’", "'"), ("“", '"'), ("”", '"')]:
        text = text.replace(curly, straight)
    return re.sub(r"\s+", " ", text).strip()


def test_normalize_basics():
    assert normalize("a  b\t\nc") == "a b c"
    assert normalize("“quote” and ‘tick’") == "\"quote\" and 'tick'"
    assert normalize("résumé") == "résumé"
    assert normalize("  padded  ") == "padded"
    assert normalize("Case KEPT") == "Case KEPT"
    folded = NormalizationPolicy(fold_case=True)
    assert normalize("Case KEPT", folded) == "case kept"


def test_find_verbatim_exact_and_perturbed():
    text = "The study examines online communities.\nIt uses “mixed methods”."
    assert find_verbatim("study examines", text) == (4, 18)
    span = find_verbatim('uses "mixed methods"', text)
    assert span is not None
    start, end = span
    assert normalize(text[start:end]) == normalize('uses "mixed methods"')
    assert find_verbatim("online\tcommunities", text) is not None
    assert find_verbatim("offline communities", text) is None


def test_find_verbatim_leftmost_match():
    text = "repeat word repeat word"
    assert find_verbatim("repeat", text) == (0, 6)


def test_find_verbatim_span_covers_original_whitespace():
    text = "alpha   beta"
    span = find_verbatim("alpha beta", text)
    assert span == (0, 12)
    assert normalize(text[span[0]:span[1]]) == "alpha beta"


def test_find_verbatim_composed_vs_decomposed():
    composed = "a résumé line"
    decomposed = "a résumé line"
    for text in (composed, decomposed):
        for snippet in ("résumé", "résumé"):
            span = find_verbatim(snippet, text)
            assert span is not None
            assert naive_norm(text[span[0]:span[1]]) == naive_norm(snippet)


def test_find_verbatim_rejects_empty_snippet():
    with pytest.raises(EmptySnippetError):
        find_verbatim("  \n\t ", "some text")


_WORDS = [
    "alpha", "beta", "gamma", "delta", "study", "design", "method",
    "résumé", "résumé", "naïve", "core",
    "“quoted”", '"plain"', "‘tick’", "it's",
]
_SEPS = [" ", "  ", "\t", "\n", " \n ", "   "]


def random_text(rng, n_words):
    parts = []
    for k in range(n_words):
        parts.append(rng.choice(_WORDS))
        if k < n_words - 1:
            parts.append(rng.choice(_SEPS))
    return "".join(parts)


def perturb(rng, snippet):
    # whitespace and quote-form changes that normalization forgives
    out = []
    for ch in snippet:
        if ch.isspace():
            out.append(rng.choice(_SEPS))
        elif ch == '"':
            out.append(rng.choice(['"', "“", "”"]))
        elif ch in "“”":
            out.append(rng.choice(['"', ch]))
        elif ch == "'":
            out.append(rng.choice(["'", "’"]))
        else:
            out.append(ch)
    s = "".join(out)
    if rng.random() < 0.5:
        s = s.replace("é", "é") if rng.random() < 0.5 else unicodedata.normalize("NFC", s)
    return s


def test_find_verbatim_agrees_with_scan_oracle_on_fuzz():
    rng = random.Random(1234)
    checked = 0
    while checked < 1000:
        text = random_text(rng, rng.randint(3, 25))
        roll = rng.random()
        if roll < 0.45:
            i = rng.randrange(len(text))
            j = rng.randrange(i + 1, min(len(text), i + 60) + 1)
            snippet = text[i:j]
        elif roll < 0.8:
            i = rng.randrange(len(text))
            j = rng.randrange(i + 1, min(len(text), i + 60) + 1)
            snippet = perturb(rng, text[i:j])
        else:
            snippet = random_text(rng, rng.randint(1, 4))
        if not naive_norm(snippet):
            continue
        span = find_verbatim(snippet, text)
        occurs = naive_norm(snippet) in naive_norm(text)
        assert (span is not None) == occurs, (text, snippet)
        if span is not None:
            start, end = span
            assert 0 <= start <= end <= len(text)
            assert normalize(text[start:end]) == normalize(snippet)
            assert naive_norm(text[start:end]) == naive_norm(snippet)
        checked += 1


# --- verify_matrix ----------------------------------------------------------------


def cell(judgment, snippet=None, explanation=""):
    return EvidenceCell(judgment=judgment, snippet=snippet, explanation=explanation)


def one_column(cells_by_row, col="F1", label="Feature one"):
    rows = tuple(cells_by_row)
    return EvidenceMatrix(
        row_ids=rows,
        column_ids=(col,),
        column_labels=(label,),
        cells={(r, col): c for r, c in cells_by_row.items()},
    )


def test_verify_matrix_marks_found_and_missing():
    contents = {
        "e1": "The framework draws on activity theory.",
        "e2": "A field deployment with 12 families.",
    }
    matrix = one_column({
        "e1": cell(Judgment.YES, "draws on activity theory"),
        "e2": cell(Judgment.YES, "a lab study with students"),
    })
    verified, report = verify_matrix(matrix, contents)
    c1 = verified.cell("e1", "F1")
    assert c1.verification is Verification.VERIFIED
    assert c1.judgment is Judgment.YES
    assert contents["e1"][c1.verified_span[0]:c1.verified_span[1]] == "draws on activity theory"
    c2 = verified.cell("e2", "F1")
    assert c2.verification is Verification.UNVERIFIABLE
    assert c2.judgment is Judgment.PARTIAL
    assert report.verified == 1
    assert report.unverifiable == 1
    assert report.downgraded == (("e2", "F1"),)


def test_verify_matrix_non_strict_keeps_judgment():
    matrix = one_column({"e1": cell(Judgment.YES, "not in there")})
    verified, report = verify_matrix(matrix, {"e1": "content"}, strict=False)
    assert verified.cell("e1", "F1").judgment is Judgment.YES
    assert verified.cell("e1", "F1").verification is Verification.UNVERIFIABLE
    assert report.downgraded == ()


def test_verify_matrix_yes_without_snippet_downgrades():
    matrix = one_column({"e1": cell(Judgment.YES)})
    verified, report = verify_matrix(matrix, {"e1": "content"})
    assert verified.cell("e1", "F1").judgment is Judgment.PARTIAL
    assert report.downgraded == (("e1", "F1"),)


def test_verify_matrix_skips_no_and_placeholder_cells():
    matrix = one_column({"e1": cell(Judgment.NO), "e2": cell(None)})
    verified, report = verify_matrix(matrix, {"e1": "a", "e2": "b"})
    assert verified.cell("e1", "F1").verification is Verification.UNCHECKED
    assert verified.cell("e2", "F1").verification is Verification.UNCHECKED
    assert report.unchecked == 2
    assert report.verified == 0


def test_verify_matrix_requires_content_for_every_row():
    matrix = one_column({"e1": cell(Judgment.YES, "x")})
    with pytest.raises(UnknownRowIdError):
        verify_matrix(matrix, {"e9": "other"})


def test_verify_matrix_partial_claims_get_verified_too():
    contents = {"e1": "mentions a survey briefly"}
    matrix = one_column({"e1": cell(Judgment.PARTIAL, "a survey")})
    verified, report = verify_matrix(matrix, contents)
    assert verified.cell("e1", "F1").verification is Verification.VERIFIED
    assert verified.cell("e1", "F1").judgment is Judgment.PARTIAL


# --- check_partition -----------------------------------------------------------------


def oracle_partition(member_lists, expected_ids):
    placed = Counter()
    for members in member_lists:
        placed.update(members)
    omitted = [i for i in expected_ids if placed[i] == 0]
    duplicated = sorted(
        (i for i, c in placed.items() if c > 1 and i in set(expected_ids)),
        key=lambda s: int(s[1:]),
    )
    unknown = sorted((i for i in placed if i not in set(expected_ids)), key=lambda s: int(s[1:]))
    return omitted, duplicated, unknown


def clusters_of(member_lists):
    return Clustering(
        clusters=tuple(
            Cluster(f"c{k + 1}", f"Group {k + 1}", (), tuple(members))
            for k, members in enumerate(member_lists)
        )
    )


def test_check_partition_valid_and_each_violation():
    ids = ["e1", "e2", "e3", "e4"]
    assert check_partition(clusters_of([["e1", "e3"], ["e2", "e4"]]), ids).ok()
    r = check_partition(clusters_of([["e1", "e3"], ["e2"]]), ids)
    assert r.omitted == ("e4",) and not r.duplicated and not r.unknown
    r = check_partition(clusters_of([["e1", "e3"], ["e2", "e3", "e4"]]), ids)
    assert r.duplicated == ("e3",)
    r = check_partition(clusters_of([["e1", "e2", "e2"], ["e3", "e4"]]), ids)
    assert r.duplicated == ("e2",)
    r = check_partition(clusters_of([["e1", "e2", "e9"], ["e3", "e4"]]), ids)
    assert r.unknown == ("e9",)


def test_check_partition_defaults_to_clustering_over():
    clustering = Clustering(
        clusters=(Cluster("c1", "Group 1", (), ("e1", "e2")),),
        over=("e1", "e2", "e3"),
    )
    report = check_partition(clustering)
    assert report.omitted == ("e3",)


def test_check_partition_agrees_with_multiset_oracle_on_fuzz():
    rng = random.Random(4321)
    for _ in range(1000):
        n = rng.randint(1, 10)
        ids = [f"e{i + 1}" for i in range(n)]
        pool = ids + [f"e{n + 1 + k}" for k in range(rng.randint(0, 2))]
        n_clusters = rng.randint(1, 4)
        member_lists = [[] for _ in range(n_clusters)]
        for i in pool:
            copies = rng.choices([0, 1, 2], weights=[2, 6, 1])[0]
            for _ in range(copies):
                member_lists[rng.randrange(n_clusters)].append(i)
        report = check_partition(clusters_of(member_lists), ids)
        omitted, duplicated, unknown = oracle_partition(member_lists, ids)
        assert list(report.omitted) == omitted
        assert list(report.duplicated) == duplicated
        assert list(report.unknown) == unknown
        placed = Counter(itertools.chain.from_iterable(member_lists))
        assert report.ok() == (placed == Counter(ids))


# --- check_support --------------------------------------------------------------------


def column_matrix(judgments):
    cells = {}
    for i, j in enumerate(judgments):
        snippet = None if j in (Judgment.NO, None) else "s"
        cells[(f"e{i + 1}", "A")] = EvidenceCell(judgment=j, snippet=snippet)
    return EvidenceMatrix(
        row_ids=tuple(f"e{i + 1}" for i in range(len(judgments))),
        column_ids=("A",),
        column_labels=("A label",),
        cells=cells,
    )


def test_check_support_exhaustive_small_columns():
    for n in range(1, 9):
        for combo in itertools.product([Judgment.YES, Judgment.PARTIAL, Judgment.NO], repeat=n):
            report = check_support(column_matrix(list(combo)))
            stats = report.columns["A"]
            yes = sum(1 for j in combo if j is Judgment.YES)
            partial = sum(1 for j in combo if j is Judgment.PARTIAL)
            no = sum(1 for j in combo if j is Judgment.NO)
            assert (stats.yes, stats.partial, stats.no) == (yes, partial, no)
            assert stats.ratio == pytest.approx((yes + partial) / n)
            assert stats.passes == ((yes + partial) / n >= 0.5)


def test_check_support_counts_placeholders_against_support():
    report = check_support(column_matrix([Judgment.YES, None, None, None]))
    stats = report.columns["A"]
    assert stats.unchecked == 3
    assert stats.ratio == 0.25
    assert not stats.passes
    assert report.failing_columns() == ("A",)


def test_check_support_threshold_boundary():
    report = check_support(column_matrix([Judgment.YES, Judgment.NO]))
    assert report.columns["A"].passes  # exactly 0.5 passes
    report = check_support(column_matrix([Judgment.YES, Judgment.NO, Judgment.NO]))
    assert not report.columns["A"].passes


# --- check_segment_map ------------------------------------------------------------------


def tile(text, cuts, source, dim=None):
    bounds = [0] + sorted(cuts) + [len(text)]
    segs = []
    for k in range(len(bounds) - 1):
        a, b = bounds[k], bounds[k + 1]
        if a == b:
            continue
        segs.append(
            Segment(
                id=f"{source.value}{k}",
                source=source,
                start=a,
                end=b,
                text=text[a:b],
                dimension=dim,
            )
        )
    return tuple(segs)


def seg_map(gen_segments, gold_segments):
    return SegmentMap(record_id="g1", segments=tuple(gen_segments) + tuple(gold_segments))


def occupancy_all_ones(segments, text):
    occ = [0] * len(text)
    for s in segments:
        if s.start < 0 or s.end > len(text) or s.start > s.end:
            return False
        for k in range(s.start, s.end):
            occ[k] += 1
    return all(c == 1 for c in occ)


def test_segment_map_accepts_exact_tiling():
    gen, gold = "abcdefgh", "stuvwxyz"
    m = seg_map(tile(gen, [3], SegmentSource.GENERATED), tile(gold, [2, 5], SegmentSource.GOLD))
    assert check_segment_map(m, gen, gold, ["Framing"]).ok()


def test_segment_map_flags_each_violation_kind():
    gen, gold = "abcdefgh", "stuvwxyz"
    gold_ok = tile(gold, [4], SegmentSource.GOLD)

    gap = (Segment("s1", SegmentSource.GENERATED, 0, 3, "abc", None),
           Segment("s2", SegmentSource.GENERATED, 5, 8, "fgh", None))
    kinds = {v.kind.value for v in check_segment_map(seg_map(gap, gold_ok), gen, gold, []).violations}
    assert kinds == {"Gap"}

    overlap = (Segment("s1", SegmentSource.GENERATED, 0, 5, "abcde", None),
               Segment("s2", SegmentSource.GENERATED, 3, 8, "defgh", None))
    kinds = {v.kind.value for v in check_segment_map(seg_map(overlap, gold_ok), gen, gold, []).violations}
    assert kinds == {"Overlap"}

    mismatch = (Segment("s1", SegmentSource.GENERATED, 0, 8, "abcdefgX", None),)
    kinds = {v.kind.value for v in check_segment_map(seg_map(mismatch, gold_ok), gen, gold, []).violations}
    assert kinds == {"SliceMismatch"}

    out = (Segment("s1", SegmentSource.GENERATED, 0, 9, "abcdefgh?", None),)
    report = check_segment_map(seg_map(out, gold_ok), gen, gold, [])
    assert {v.kind.value for v in report.violations} == {"IndexOutOfRange", "Gap"}

    unknown = (Segment("s1", SegmentSource.GENERATED, 0, 8, "abcdefgh", "Ghost"),)
    kinds = {v.kind.value for v in check_segment_map(seg_map(unknown, gold_ok), gen, gold, ["Framing"]).violations}
    assert kinds == {"UnknownDimension"}


def test_segment_map_accepts_iff_occupancy_all_ones_fuzz():
    rng = random.Random(555)
    for _ in range(500):
        text = random_text(rng, rng.randint(1, 12))
        gold = random_text(rng, rng.randint(1, 6))
        gold_segs = tile(gold, sorted(rng.sample(range(1, len(gold)), min(2, len(gold) - 1))), SegmentSource.GOLD)
        if rng.random() < 0.5:
            cuts = sorted(set(rng.randrange(1, len(text)) for _ in range(rng.randint(0, 4))))
            segs = tile(text, cuts, SegmentSource.GENERATED)
        else:
            segs = tuple(
                Segment(
                    id=f"r{k}",
                    source=SegmentSource.GENERATED,
                    start=(a := rng.randrange(0, len(text))),
                    end=min(len(text), a + rng.randint(1, 8)),
                    text="",
                    dimension=None,
                )
                for k in range(rng.randint(1, 5))
            )
            segs = tuple(
                Segment(s.id, s.source, s.start, s.end, text[s.start:s.end], None)
                for s in segs
            )
        report = check_segment_map(seg_map(segs, gold_segs), text, gold, [])
        gen_ok = not [v for v in report.violations if v.source == "generated"]
        assert gen_ok == occupancy_all_ones(segs, text)


def test_segment_map_mutation_detection():
    rng = random.Random(777)
    for _ in range(500):
        text = random_text(rng, rng.randint(2, 12))
        cuts = sorted(set(rng.randrange(1, len(text)) for _ in range(rng.randint(1, 4))))
        base = list(tile(text, cuts, SegmentSource.GENERATED, dim="Framing"))
        gold = "gold text here."
        gold_segs = tile(gold, [], SegmentSource.GOLD)
        mutation = rng.choice(["gap", "overlap", "off_by_one", "slice", "dimension"])
        k = rng.randrange(len(base))
        s = base[k]
        if mutation == "gap" and len(base) > 1:
            del base[k]
            expect = {"Gap"}
        elif mutation == "overlap":
            base.append(Segment("dup", s.source, s.start, s.end, s.text, s.dimension))
            expect = {"Overlap"}
        elif mutation == "off_by_one":
            if s.end - s.start < 2 or s.end == len(text):
                new = Segment(s.id, s.source, s.start + 1, s.end, s.text, s.dimension)
            else:
                new = Segment(s.id, s.source, s.start, s.end + 1, s.text, s.dimension)
            base[k] = new
            expect = {"Gap", "Overlap", "SliceMismatch", "IndexOutOfRange"}
        elif mutation == "slice":
            base[k] = Segment(s.id, s.source, s.start, s.end, s.text + "!", s.dimension)
            expect = {"SliceMismatch"}
        elif mutation == "dimension":
            base[k] = Segment(s.id, s.source, s.start, s.end, s.text, "Nonexistent")
            expect = {"UnknownDimension"}
        else:
            continue
        report = check_segment_map(
            seg_map(tuple(base), gold_segs), text, gold, ["Framing"]
        )
        found = {v.kind.value for v in report.violations if v.source == "generated"}
        assert found & expect, (mutation, text, base)


def test_sentence_spans_tile_exactly():
    rng = random.Random(999)
    for _ in range(500):
        text = random_text(rng, rng.randint(0, 20))
        if rng.random() < 0.6:
            text = text + rng.choice([".", "?!", ".\n", ""])
        spans = sentence_spans(text)
        occ = [0] * len(text)
        for a, b in spans:
            assert 0 <= a < b <= len(text)
            for k in range(a, b):
                occ[k] += 1
        assert all(c == 1 for c in occ)


def test_sentence_spans_split_points():
    spans = sentence_spans("One. Two!  Three\nFour")
    texts = ["One. Two!  Three\nFour"[a:b] for a, b in spans]
    assert texts == ["One. ", "Two!  ", "Three\n", "Four"]
