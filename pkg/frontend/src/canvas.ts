/** Node-based canvas view-model for a session.
 *
 * The canvas shows one root clustering node, one node per cluster, one node
 * per schema revision (linked to its parent revision), and one node per
 * generation record. At most one side panel is open at a time and it is
 * always bound to the selected node.
 */

import type { NodeStatus, SessionView } from "./api.js";

export type CanvasNodeKind = "clustering" | "cluster" | "schema" | "generation";

export interface CanvasNode {
  id: string;
  kind: CanvasNodeKind;
  label: string;
  statusBadge: NodeStatus;
  selected: boolean;
  parentId: string | null;
}

export type PanelKind = "cluster-overview" | "feature-matrix" | "schema-detail" | "comparison";

export interface PanelBinding {
  nodeId: string;
  kind: PanelKind;
}

export interface CanvasModel {
  nodes: CanvasNode[];
  panel: PanelBinding | null;
}

const PANEL_FOR_KIND: Record<CanvasNodeKind, PanelKind> = {
  clustering: "cluster-overview",
  cluster: "feature-matrix",
  schema: "schema-detail",
  generation: "comparison",
};

/** Combine stage statuses into one badge: Failed > Running > Done > Idle. */
export function rollupStatus(statuses: readonly NodeStatus[]): NodeStatus {
  if (statuses.length === 0) {
    return "Idle";
  }
  if (statuses.includes("Failed")) {
    return "Failed";
  }
  if (statuses.includes("Running")) {
    return "Running";
  }
  if (statuses.every((status) => status === "Done")) {
    return "Done";
  }
  return "Idle";
}

function statusOf(session: SessionView, key: string): NodeStatus | null {
  const state = session.nodes[key];
  return state ? state.status : null;
}

function presentStatuses(session: SessionView, keys: readonly string[]): NodeStatus[] {
  const statuses: NodeStatus[] = [];
  for (const key of keys) {
    const status = statusOf(session, key);
    if (status !== null) {
      statuses.push(status);
    }
  }
  return statuses;
}

/** Build the canvas for a session, marking `selectedId` and binding its panel. */
export function buildCanvas(session: SessionView, selectedId: string | null = null): CanvasModel {
  const nodes: CanvasNode[] = [];

  nodes.push({
    id: "clustering",
    kind: "clustering",
    label: "Clustering",
    statusBadge: statusOf(session, "cluster") ?? "Idle",
    selected: false,
    parentId: null,
  });

  const clusters = session.clustering ? session.clustering.clusters : [];
  const clusterOrder = new Map<string, number>();
  for (const cluster of clusters) {
    clusterOrder.set(cluster.id, clusterOrder.size);
    nodes.push({
      id: `cluster:${cluster.id}`,
      kind: "cluster",
      label: cluster.name,
      statusBadge: rollupStatus(
        presentStatuses(session, [
          `feature_matrix:${cluster.id}`,
          `dimensions:${cluster.id}`,
          `attributes:${cluster.id}`,
          `overall:${cluster.id}`,
        ]),
      ),
      selected: false,
      parentId: "clustering",
    });
  }

  const clusterName = (clusterId: string): string => {
    const cluster = clusters.find((c) => c.id === clusterId);
    return cluster ? cluster.name : clusterId;
  };

  const schemas = Object.values(session.schemas).sort((a, b) => {
    const byCluster =
      (clusterOrder.get(a.cluster_id) ?? clusterOrder.size) -
      (clusterOrder.get(b.cluster_id) ?? clusterOrder.size);
    return byCluster !== 0 ? byCluster : a.revision - b.revision;
  });
  for (const schema of schemas) {
    nodes.push({
      id: `schema:${schema.id}`,
      kind: "schema",
      label: `${clusterName(schema.cluster_id)} r${schema.revision}`,
      statusBadge: statusOf(session, `apply:${schema.id}`) ?? "Done",
      selected: false,
      parentId: schema.parent_id !== null ? `schema:${schema.parent_id}` : `cluster:${schema.cluster_id}`,
    });
  }

  const records = Object.values(session.records).sort((a, b) => a.id.localeCompare(b.id));
  for (const record of records) {
    const stages = presentStatuses(session, [`contrast:${record.id}`, `align:${record.id}`]);
    nodes.push({
      id: `generation:${record.id}`,
      kind: "generation",
      label: record.id,
      statusBadge: stages.length > 0 ? rollupStatus(stages) : "Done",
      selected: false,
      parentId: `schema:${record.schema_id}`,
    });
  }

  let panel: PanelBinding | null = null;
  if (selectedId !== null) {
    const selected = nodes.find((node) => node.id === selectedId);
    if (selected) {
      selected.selected = true;
      panel = { nodeId: selected.id, kind: PANEL_FOR_KIND[selected.kind] };
    }
  }
  return { nodes, panel };
}

/** Nodes of one kind, in canvas order. */
export function nodesOfKind(model: CanvasModel, kind: CanvasNodeKind): CanvasNode[] {
  return model.nodes.filter((node) => node.kind === kind);
}
