"""Headless command line: full pipeline runs, single stages, and the baseline.

Every stage reads its inputs from the artifact directory and writes its
outputs back there, so a full run and the same stages chained by hand
produce identical files. All writes go through a temp file and an atomic
rename; a killed run never leaves a half-written artifact.

Exit codes are a stable contract: 0 success, 2 validation hard failure,
3 transport failure (endpoint, transcript), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .abstraction import (
    AttributeInference,
    DimensionInference,
    assemble_schema,
    infer_dimension_attributes,
    infer_dimensions,
    infer_overall_attributes,
)
from .clustering import build_feature_matrix, propose_clusters
from .errors import (
    MissingArtifactError,
    NoEligibleInputsError,
    NothingToApplyError,
    SchemexError,
    TranscriptCorruptError,
    TranscriptMissError,
    TransportError,
)
from .evidence import VerificationReport
from .gateway import Gateway, HttpTransport, ModelParams, TranscriptMode
from .ingest import load_directory, load_examples, load_manifest
from .model import (
    Attribute,
    Clustering,
    Dimension,
    EvidenceMatrix,
    ExampleSet,
    GenerationRecord,
    ReviewStatus,
    Schema,
    diff_revisions,
    dumps_canonical,
    split_validation,
)
from .refinement import (
    Accept,
    ApplyTargets,
    ContrastReport,
    apply_schema,
    contrast,
    iterate_schema,
    review_suggestion,
    run_baseline,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRANSPORT = 3
EXIT_USAGE = 64

DEFAULT_K = 2
DEFAULT_HOLDOUT_RATIO = 0.2
DEFAULT_OUT = "schemex-out"

STAGES = (
    "ingest",
    "cluster",
    "matrix",
    "dimensions",
    "attributes",
    "overall",
    "apply",
    "contrast",
    "iterate",
)


class UsageError(SchemexError):
    pass


# --- artifact files ----------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    tmp_path.write_text(text, encoding="utf-8")
    tmp_path.replace(path)


def write_artifact(path: Path, obj) -> None:
    atomic_write(path, dumps_canonical(obj))


def read_artifact(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(str(path))
    return json.loads(path.read_text(encoding="utf-8"))


def example_set_path(out: Path) -> Path:
    return out / "example_set.json"


def clustering_path(out: Path) -> Path:
    return out / "clustering.json"


def verification_path(out: Path) -> Path:
    return out / "verification.json"


def cluster_dir(out: Path, cluster_id: str) -> Path:
    return out / "clusters" / cluster_id


def generations_path(out: Path) -> Path:
    return out / "generations.jsonl"


def contrast_path(out: Path) -> Path:
    return out / "contrast.json"


def load_example_set(out: Path) -> ExampleSet:
    return ExampleSet.from_dict(read_artifact(example_set_path(out)))


def load_clustering(out: Path) -> Clustering:
    return Clustering.from_dict(read_artifact(clustering_path(out)))


def load_schema_chain(out: Path, cluster_id: str) -> list[Schema]:
    data = read_artifact(cluster_dir(out, cluster_id) / "schema.json")
    return [Schema.from_dict(d) for d in data["revisions"]]


def write_schema_chain(out: Path, cluster_id: str, revisions: list[Schema]) -> None:
    write_artifact(
        cluster_dir(out, cluster_id) / "schema.json",
        {"cluster_id": cluster_id, "revisions": [s.to_dict() for s in revisions]},
    )


def load_generations(out: Path) -> list[GenerationRecord]:
    path = generations_path(out)
    if not path.exists():
        raise MissingArtifactError(str(path))
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(GenerationRecord.from_dict(json.loads(line)))
    return records


def update_verification(out: Path, stage: str, summary: dict) -> None:
    path = verification_path(out)
    data = read_artifact(path) if path.exists() else {}
    data[stage] = summary
    write_artifact(path, data)


# --- gateway construction ------------------------------------------------------------


def build_gateway(args) -> Gateway:
    model = args.model or os.environ.get("SCHEMEX_MODEL", "")
    params = ModelParams(model=model, temperature=0.0, seed=args.seed)
    if args.replay:
        return Gateway(
            params=params,
            mode=TranscriptMode.REPLAY,
            transcript_path=Path(args.replay),
        )
    base_url = args.base_url or os.environ.get("SCHEMEX_BASE_URL", "")
    if not model or not base_url:
        raise TransportError(
            "no model endpoint configured; pass --model and --base-url "
            "or set SCHEMEX_MODEL and SCHEMEX_BASE_URL"
        )
    transport = HttpTransport(base_url, api_key=os.environ.get("SCHEMEX_API_KEY", ""))
    if args.record:
        return Gateway(
            params=params,
            transport=transport,
            mode=TranscriptMode.RECORD,
            transcript_path=Path(args.record),
        )
    return Gateway(params=params, transport=transport)


# --- stages --------------------------------------------------------------------------


def stage_ingest(out: Path, args, gateway: Optional[Gateway]) -> None:
    if not args.goal and not args.examples:
        raise UsageError("ingest needs --goal and --examples")
    if not args.examples:
        raise UsageError("ingest needs --examples <dir|manifest>")
    source = Path(args.examples)
    if source.is_dir():
        if not args.goal:
            raise UsageError("ingesting a directory needs --goal")
        manifest = load_directory(source, goal=args.goal)
    else:
        manifest = load_manifest(source)
        if args.goal:
            manifest = replace(manifest, goal=args.goal)
    example_set = load_examples(manifest, gateway=gateway)
    if args.holdout_ratio:
        example_set = split_validation(example_set, args.holdout_ratio, args.seed)
    write_artifact(example_set_path(out), example_set.to_dict())
    held = len(example_set.holdout_ids)
    print(f"[ingest] {len(example_set.examples)} examples ({held} held out)")


def stage_cluster(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = propose_clusters(example_set, gateway)
    write_artifact(clustering_path(out), clustering.to_dict())
    sizes = ", ".join(f"{c.id}:{len(c.member_ids)}" for c in clustering.clusters)
    print(f"[cluster] {len(clustering.clusters)} clusters ({sizes})")


def stage_matrix(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    clusters = []
    summary = {}
    for cluster in clustering.clusters:
        matrix, report = build_feature_matrix(
            cluster, example_set, gateway, strict=args.strict
        )
        clusters.append(replace(cluster, feature_matrix=matrix))
        summary[cluster.id] = report.to_dict()
    clustering = Clustering(clusters=tuple(clusters), over=clustering.over)
    write_artifact(clustering_path(out), clustering.to_dict())
    update_verification(out, "matrix", summary)
    print(f"[matrix] feature matrices for {len(clusters)} clusters")


def stage_dimensions(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    summary = {}
    for cluster in clustering.clusters:
        inference = infer_dimensions(cluster, example_set, gateway, strict=args.strict)
        write_artifact(
            cluster_dir(out, cluster.id) / "dimensions.json",
            {
                "dimensions": [d.to_dict() for d in inference.dimensions],
                "matrix": inference.matrix.to_dict(),
                "report": inference.report.to_dict(),
            },
        )
        summary[cluster.id] = inference.report.to_dict()
        print(f"[dimensions] {cluster.id}: {len(inference.dimensions)} dimensions")
    update_verification(out, "dimensions", summary)


def stage_attributes(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    summary = {}
    for cluster in clustering.clusters:
        saved = read_artifact(cluster_dir(out, cluster.id) / "dimensions.json")
        dimensions = tuple(Dimension.from_dict(d) for d in saved["dimensions"])
        inference = infer_dimension_attributes(
            cluster, example_set, dimensions, gateway, strict=args.strict
        )
        write_artifact(
            cluster_dir(out, cluster.id) / "attributes.json",
            {
                "attributes": {
                    dim_id: [a.to_dict() for a in attrs]
                    for dim_id, attrs in sorted(inference.attributes.items())
                },
                "matrices": {
                    dim_id: m.to_dict()
                    for dim_id, m in sorted(inference.matrices.items())
                },
                "reports": {
                    dim_id: r.to_dict()
                    for dim_id, r in sorted(inference.reports.items())
                },
                "dropped": [list(t) for t in inference.dropped],
            },
        )
        summary[cluster.id] = {
            dim_id: r.to_dict() for dim_id, r in sorted(inference.reports.items())
        }
        count = sum(len(attrs) for attrs in inference.attributes.values())
        print(f"[attributes] {cluster.id}: {count} attributes kept")
    update_verification(out, "attributes", summary)


def stage_overall(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    summary = {}
    for cluster in clustering.clusters:
        dims_saved = read_artifact(cluster_dir(out, cluster.id) / "dimensions.json")
        attrs_saved = read_artifact(cluster_dir(out, cluster.id) / "attributes.json")
        dimension_inference = DimensionInference(
            dimensions=tuple(Dimension.from_dict(d) for d in dims_saved["dimensions"]),
            matrix=EvidenceMatrix.from_dict(dims_saved["matrix"]),
            report=VerificationReport.from_dict(dims_saved["report"]),
        )
        attribute_inference = AttributeInference(
            attributes={
                dim_id: tuple(Attribute.from_dict(a) for a in attrs)
                for dim_id, attrs in attrs_saved["attributes"].items()
            },
            matrices={
                dim_id: EvidenceMatrix.from_dict(m)
                for dim_id, m in attrs_saved["matrices"].items()
            },
        )
        overall = infer_overall_attributes(cluster, example_set, gateway, strict=args.strict)
        schema = assemble_schema(cluster, dimension_inference, attribute_inference, overall)
        write_schema_chain(out, cluster.id, [schema])
        summary[cluster.id] = overall.report.to_dict() if overall.report else {}
        for warning in overall.warnings:
            logger.warning("%s: %s", cluster.id, warning)
        print(f"[overall] {cluster.id}: schema {schema.id} assembled")
    update_verification(out, "overall", summary)


def stage_apply(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    lines = []
    total = 0
    for cluster in clustering.clusters:
        schema = load_schema_chain(out, cluster.id)[-1]
        try:
            records = apply_schema(
                schema,
                cluster,
                example_set,
                gateway,
                targets=ApplyTargets.BOTH,
                k=args.k,
                seed=args.seed,
            )
        except NoEligibleInputsError:
            logger.warning(
                "skipping generation for %s: no members carry an input context",
                cluster.id,
            )
            continue
        for record in records:
            lines.append(
                json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))
            )
        total += len(records)
    atomic_write(generations_path(out), "".join(line + "\n" for line in lines))
    print(f"[apply] {total} generations written")


def stage_contrast(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    schemas = {}
    for cluster in clustering.clusters:
        for schema in load_schema_chain(out, cluster.id):
            schemas[schema.id] = schema
    reports = {}
    suggestion_count = 0
    for record in load_generations(out):
        if record.gold_id is None or record.schema_id not in schemas:
            continue
        gold = example_set.by_id(record.gold_id)
        report = contrast(schemas[record.schema_id], record, gold, gateway)
        reports[record.id] = report.to_dict()
        suggestion_count += len(report.suggestions)
    write_artifact(contrast_path(out), reports)
    print(f"[contrast] {len(reports)} records compared, {suggestion_count} suggestions")


def stage_iterate(out: Path, args, gateway: Gateway) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    saved = read_artifact(contrast_path(out))
    reports = {rid: ContrastReport.from_dict(d) for rid, d in saved.items()}
    for rid, report in reports.items():
        for suggestion in report.suggestions:
            if suggestion.status is ReviewStatus.PENDING:
                report = review_suggestion(report, suggestion.id, Accept())
        reports[rid] = report
    write_artifact(contrast_path(out), {rid: r.to_dict() for rid, r in reports.items()})
    for cluster in clustering.clusters:
        revisions = load_schema_chain(out, cluster.id)
        current = revisions[-1]
        suggestions = [
            suggestion
            for report in reports.values()
            if report.record_id.startswith(f"{current.id}-")
            for suggestion in report.suggestions
        ]
        try:
            revised = iterate_schema(
                current, suggestions, gateway, goal=example_set.goal
            )
        except NothingToApplyError:
            print(f"[iterate] {cluster.id}: no accepted suggestions, schema unchanged")
            continue
        revisions.append(revised)
        write_schema_chain(out, cluster.id, revisions)
        diff = diff_revisions(current, revised)
        changes = sum(len(v) for v in diff.to_dict().values())
        print(f"[iterate] {cluster.id}: {revised.id} committed ({changes} changes)")


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "cluster": stage_cluster,
    "matrix": stage_matrix,
    "dimensions": stage_dimensions,
    "attributes": stage_attributes,
    "overall": stage_overall,
    "apply": stage_apply,
    "contrast": stage_contrast,
    "iterate": stage_iterate,
}


# --- report -------------------------------------------------------------------------


def _verification_line(report: dict) -> str:
    if not report:
        return "no snippet checks recorded"
    return (
        f"{report.get('verified', 0)} verified, "
        f"{report.get('unverifiable', 0)} unverifiable, "
        f"{len(report.get('downgraded', []))} downgraded"
    )


def write_report(out: Path) -> None:
    example_set = load_example_set(out)
    clustering = load_clustering(out)
    verification = (
        read_artifact(verification_path(out))
        if verification_path(out).exists()
        else {}
    )
    lines = ["# Run report", ""]
    lines.append("## Examples")
    lines.append(f"- goal: {example_set.goal}")
    lines.append(
        f"- {len(example_set.examples)} examples, "
        f"{len(example_set.holdout_ids)} held out for validation"
    )
    lines.append("")
    lines.append("## Clustering")
    for cluster in clustering.clusters:
        lines.append(f"- {cluster.id} {cluster.name!r}: {len(cluster.member_ids)} members")
        matrix_report = verification.get("matrix", {}).get(cluster.id)
        if matrix_report is not None:
            lines.append(f"  - feature snippets: {_verification_line(matrix_report)}")
    lines.append("")
    lines.append("## Schemas")
    for cluster in clustering.clusters:
        try:
            revisions = load_schema_chain(out, cluster.id)
        except MissingArtifactError:
            continue
        current = revisions[-1]
        lines.append(
            f"- {cluster.id}: {len(revisions)} revision(s), current {current.id}"
        )
        dim_report = verification.get("dimensions", {}).get(cluster.id)
        if dim_report is not None:
            lines.append(f"  - dimension snippets: {_verification_line(dim_report)}")
        for dim_id, attr_report in sorted(
            verification.get("attributes", {}).get(cluster.id, {}).items()
        ):
            lines.append(f"  - attribute snippets ({dim_id}): {_verification_line(attr_report)}")
        overall_report = verification.get("overall", {}).get(cluster.id)
        if overall_report is not None:
            lines.append(f"  - overall snippets: {_verification_line(overall_report)}")
        for dimension in current.dimensions:
            lines.append(
                f"  - {dimension.id} {dimension.name!r}: {len(dimension.attributes)} attributes"
            )
        lines.append(f"  - overall attributes: {len(current.overall_attributes)}")
    lines.append("")
    lines.append("## Generations")
    try:
        records = load_generations(out)
    except MissingArtifactError:
        records = []
    holdout_count = sum(1 for r in records if r.is_holdout)
    lines.append(f"- {len(records)} outputs ({holdout_count} against holdout examples)")
    lines.append("")
    lines.append("## Contrast")
    if contrast_path(out).exists():
        saved = read_artifact(contrast_path(out))
        total = sum(len(d.get("suggestions", [])) for d in saved.values())
        lines.append(f"- {len(saved)} records compared, {total} suggestions")
        for rid, d in sorted(saved.items()):
            for suggestion in d.get("suggestions", []):
                lines.append(
                    f"  - {suggestion['id']} [{suggestion['tag']}] "
                    f"({suggestion['status']}) {suggestion['text']}"
                )
    else:
        lines.append("- not run")
    lines.append("")
    atomic_write(out / "report.md", "\n".join(lines) + "\n")
    print(f"[report] {out / 'report.md'} written")


# --- commands -----------------------------------------------------------------------


def cmd_run(args) -> int:
    if not args.goal or not args.examples:
        raise UsageError("run needs both --goal and --examples")
    if args.iterations < 0:
        raise UsageError("--iterations must be 0 or more")
    out = Path(args.out)
    gateway = build_gateway(args)
    stage_ingest(out, args, gateway)
    stage_cluster(out, args, gateway)
    stage_matrix(out, args, gateway)
    stage_dimensions(out, args, gateway)
    stage_attributes(out, args, gateway)
    stage_overall(out, args, gateway)
    stage_apply(out, args, gateway)
    for n in range(args.iterations):
        stage_contrast(out, args, gateway)
        stage_iterate(out, args, gateway)
        if n + 1 < args.iterations:
            stage_apply(out, args, gateway)
    write_report(out)
    return EXIT_OK


def cmd_stage(args) -> int:
    out = Path(args.out)
    needs_gateway = args.stage != "ingest" or args.record or args.replay
    gateway = build_gateway(args) if needs_gateway else None
    STAGE_FUNCS[args.stage](out, args, gateway)
    return EXIT_OK


def cmd_baseline(args) -> int:
    if not args.goal or not args.examples:
        raise UsageError("baseline needs both --goal and --examples")
    out = Path(args.out)
    gateway = build_gateway(args)
    stage_ingest(out, args, gateway)
    example_set = load_example_set(out)
    text = run_baseline(example_set, gateway)
    atomic_write(out / "baseline.md", text if text.endswith("\n") else text + "\n")
    print(f"[baseline] {out / 'baseline.md'} written")
    return EXIT_OK


# --- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--goal", default="", help="what the induced schema is for")
    common.add_argument("--examples", default="", help="examples directory or manifest file")
    common.add_argument("--out", default=DEFAULT_OUT, help="artifact directory")
    common.add_argument("--iterations", type=int, default=1, help="refinement rounds")
    common.add_argument("--k", type=int, default=DEFAULT_K, help="cluster members sampled per generation round")
    common.add_argument("--holdout-ratio", type=float, default=DEFAULT_HOLDOUT_RATIO, help="validation split ratio; 0 disables the split")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling and splits")
    common.add_argument("--strict", action="store_true", help="downgrade unverifiable claims and drop unsupported attributes")
    transcript = common.add_mutually_exclusive_group()
    transcript.add_argument("--record", default="", help="record every model exchange to this transcript")
    transcript.add_argument("--replay", default="", help="replay model exchanges from this transcript instead of calling out")
    common.add_argument("--model", default="", help="completion model name (or SCHEMEX_MODEL)")
    common.add_argument("--base-url", default="", help="completion endpoint (or SCHEMEX_BASE_URL)")

    parser = argparse.ArgumentParser(
        prog="schemex",
        description="Induce explicit schemas from example sets and refine them contrastively.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", parents=[common], help="run the full pipeline")
    run_parser.set_defaults(func=cmd_run)
    stage_parser = sub.add_parser("stage", parents=[common], help="run one stage against on-disk artifacts")
    stage_parser.add_argument("stage", choices=STAGES)
    stage_parser.set_defaults(func=cmd_stage)
    baseline_parser = sub.add_parser("baseline", parents=[common], help="write example-grounded guidance without inducing a schema")
    baseline_parser.set_defaults(func=cmd_baseline)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, TranscriptMissError, TranscriptCorruptError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except SchemexError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    finally:
        sys.stdout.flush()


if __name__ == "__main__":
    raise SystemExit(main())
