/** Lookup helpers over a fetched session view.
 *
 * These navigate the session artifact graph for the panels: cluster for a
 * canvas node, example content for matrix rows, schema and gold text for a
 * generation record. They read only; no schema logic happens client-side.
 */

import type {
  ClusterView,
  ContrastReportView,
  RecordView,
  SchemaView,
  SegmentMapView,
  SessionView,
} from "./api.js";

export function clusterById(session: SessionView, clusterId: string): ClusterView | null {
  if (!session.clustering) {
    return null;
  }
  return session.clustering.clusters.find((cluster) => cluster.id === clusterId) ?? null;
}

export function exampleContent(session: SessionView, exampleId: string): string | null {
  const example = session.example_set.examples.find((candidate) => candidate.id === exampleId);
  return example ? example.content : null;
}

export function schemaById(session: SessionView, schemaId: string): SchemaView | null {
  return session.schemas[schemaId] ?? null;
}

export function recordById(session: SessionView, recordId: string): RecordView | null {
  return session.records[recordId] ?? null;
}

export function reportFor(session: SessionView, recordId: string): ContrastReportView | null {
  return session.reports[recordId] ?? null;
}

export function segmentMapFor(session: SessionView, recordId: string): SegmentMapView | null {
  return session.segment_maps[recordId] ?? null;
}

/** Gold example content paired with a generation record, if any. */
export function goldContentFor(session: SessionView, record: RecordView): string | null {
  if (record.gold_id === null) {
    return null;
  }
  return exampleContent(session, record.gold_id);
}

/** Schema revisions for one cluster, oldest first. */
export function revisionChain(session: SessionView, clusterId: string): SchemaView[] {
  return Object.values(session.schemas)
    .filter((schema) => schema.cluster_id === clusterId)
    .sort((a, b) => a.revision - b.revision);
}

/** Parent revision of a schema, or null for revision zero. */
export function parentSchema(session: SessionView, schema: SchemaView): SchemaView | null {
  return schema.parent_id !== null ? (session.schemas[schema.parent_id] ?? null) : null;
}

/** Canvas node id prefixes map to artifact ids; strip them for lookups. */
export function artifactIdOf(nodeId: string): { kind: string; id: string } {
  const separator = nodeId.indexOf(":");
  if (separator === -1) {
    return { kind: nodeId, id: "" };
  }
  return { kind: nodeId.slice(0, separator), id: nodeId.slice(separator + 1) };
}
