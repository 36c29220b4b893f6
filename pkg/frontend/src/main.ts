/** Browser entry point: mounts the canvas, panels, and review flow.
 *
 * All state flows one way: fetch the session, build view-models, render
 * HTML, and wire handlers that either change the selection or post an
 * edit through the service client and refetch. Failures surface as
 * non-blocking toasts with a retry hook.
 */

import { ApiError, ReviewAction, ServiceClient, SessionView } from "./api.js";
import { buildCanvas, CanvasModel, PanelBinding } from "./canvas.js";
import { buildComparison } from "./compare.js";
import { buildMatrixView, cellDetail } from "./matrix.js";
import {
  renderCanvas,
  renderCellDetail,
  renderComparison,
  renderDiff,
  renderMatrixPanel,
  renderReviewRows,
  escapeHtml,
} from "./render.js";
import { buildReviewRows } from "./review.js";
import { diffSchemas } from "./schemaDiff.js";
import {
  artifactIdOf,
  clusterById,
  exampleContent,
  goldContentFor,
  parentSchema,
  recordById,
  reportFor,
  schemaById,
  segmentMapFor,
} from "./session.js";
import { ToastQueue } from "./toasts.js";

interface CellSelection {
  rowId: string;
  columnId: string;
}

class App {
  private client: ServiceClient;
  private toasts = new ToastQueue();
  private session: SessionView | null = null;
  private selectedNode: string | null = null;
  private selectedCell: CellSelection | null = null;
  private root: HTMLElement;

  constructor(root: HTMLElement, client: ServiceClient) {
    this.root = root;
    this.client = client;
  }

  async start(): Promise<void> {
    await this.loadSession();
  }

  private async loadSession(): Promise<void> {
    try {
      const listing = await this.client.listSessions();
      if (listing.sessions.length === 0) {
        this.root.innerHTML = `<p class="empty">No sessions on the service yet. Create one with the CLI or the API.</p>`;
        return;
      }
      this.session = await this.client.getSession(listing.sessions[0]);
      this.draw();
    } catch (error) {
      this.toast(`Could not load the session: ${describe(error)}`, () => void this.loadSession());
      this.drawToasts();
    }
  }

  private toast(message: string, retry: (() => void) | null): void {
    this.toasts.push(message, retry);
  }

  private draw(): void {
    if (!this.session) {
      return;
    }
    const model = buildCanvas(this.session, this.selectedNode);
    this.root.innerHTML = [
      `<header><h1>${escapeHtml(this.session.goal)}</h1></header>`,
      `<main class="layout">`,
      renderCanvas(model),
      `<aside class="side-panel">${this.panelHtml(model)}</aside>`,
      `</main>`,
      `<div class="toasts"></div>`,
    ].join("\n");
    this.wireCanvas();
    this.wirePanel();
    this.drawToasts();
  }

  private panelHtml(model: CanvasModel): string {
    if (!this.session || model.panel === null) {
      return `<p class="panel-hint">Select a node to inspect it.</p>`;
    }
    return this.renderPanelFor(model.panel);
  }

  private renderPanelFor(panel: PanelBinding): string {
    const session = this.session;
    if (!session) {
      return "";
    }
    const { kind, id } = artifactIdOf(panel.nodeId);
    if (kind === "clustering" && session.clustering) {
      const rows = session.clustering.clusters
        .map((cluster) => `<li>${escapeHtml(cluster.name)} (${cluster.member_ids.length} examples)</li>`)
        .join("");
      return `<ul class="cluster-list">${rows}</ul>`;
    }
    if (kind === "cluster") {
      const cluster = clusterById(session, id);
      if (!cluster || !cluster.feature_matrix) {
        return `<p class="panel-hint">Run the feature matrix stage to see evidence.</p>`;
      }
      const matrixHtml = renderMatrixPanel(buildMatrixView(cluster.feature_matrix));
      let detailHtml = "";
      if (this.selectedCell) {
        const source = exampleContent(session, this.selectedCell.rowId) ?? "";
        detailHtml = renderCellDetail(
          cellDetail(cluster.feature_matrix, this.selectedCell.rowId, this.selectedCell.columnId, source),
        );
      }
      return matrixHtml + detailHtml;
    }
    if (kind === "schema") {
      const schema = schemaById(session, id);
      if (!schema) {
        return `<p class="panel-hint">Schema ${escapeHtml(id)} is not loaded.</p>`;
      }
      const dims = schema.dimensions
        .map((dimension) => `<li><strong>${escapeHtml(dimension.name)}</strong>: ${escapeHtml(dimension.description)}</li>`)
        .join("");
      const parent = parentSchema(session, schema);
      const diffHtml = parent ? renderDiff(diffSchemas(parent, schema)) : "";
      const iterate = `<button data-action="iterate" data-schema-id="${escapeHtml(schema.id)}">Iterate</button>`;
      return `<ul class="dimension-list">${dims}</ul>${diffHtml}${iterate}`;
    }
    if (kind === "generation") {
      const record = recordById(session, id);
      if (!record) {
        return `<p class="panel-hint">Record ${escapeHtml(id)} is not loaded.</p>`;
      }
      const parts: string[] = [];
      const map = segmentMapFor(session, id);
      const gold = goldContentFor(session, record);
      const schema = schemaById(session, record.schema_id);
      if (map && gold !== null && schema) {
        parts.push(renderComparison(buildComparison(map, record.composed, gold, schema.dimensions)));
      } else {
        parts.push(`<p class="panel-hint">Run alignment to compare against the reference.</p>`);
      }
      const report = reportFor(session, id);
      if (report) {
        parts.push(renderReviewRows(buildReviewRows(report, schema)));
      }
      return parts.join("\n");
    }
    return `<p class="panel-hint">Nothing to show for this node.</p>`;
  }

  private wireCanvas(): void {
    for (const element of this.root.querySelectorAll<HTMLElement>("[data-node-id]")) {
      element.addEventListener("click", () => {
        this.selectedNode = element.dataset.nodeId ?? null;
        this.selectedCell = null;
        this.draw();
      });
    }
  }

  private wirePanel(): void {
    for (const cell of this.root.querySelectorAll<HTMLElement>(".matrix-cell")) {
      cell.addEventListener("click", () => {
        const rowId = cell.dataset.row;
        const columnId = cell.dataset.column;
        if (rowId !== undefined && columnId !== undefined) {
          this.selectedCell = { rowId, columnId };
          this.draw();
        }
      });
    }
    for (const button of this.root.querySelectorAll<HTMLButtonElement>("button[data-suggestion-id]")) {
      button.addEventListener("click", () => {
        const action = button.dataset.action;
        const suggestionId = button.dataset.suggestionId;
        if (action !== undefined && suggestionId !== undefined) {
          void this.submitReview(suggestionId, action);
        }
      });
    }
    for (const button of this.root.querySelectorAll<HTMLButtonElement>('button[data-action="iterate"]')) {
      button.addEventListener("click", () => {
        const schemaId = button.dataset.schemaId;
        if (schemaId !== undefined) {
          void this.runIterate(schemaId);
        }
      });
    }
  }

  private reviewAction(action: string): ReviewAction | null {
    if (action === "accept") {
      return { kind: "Accept" };
    }
    if (action === "reject") {
      return { kind: "Reject" };
    }
    if (action === "edit") {
      const text = window.prompt("Edited suggestion text:");
      return text !== null && text.length > 0 ? { kind: "Edit", text } : null;
    }
    return null;
  }

  private async submitReview(suggestionId: string, actionName: string): Promise<void> {
    const session = this.session;
    if (!session || this.selectedNode === null) {
      return;
    }
    const { id: recordId } = artifactIdOf(this.selectedNode);
    const action = this.reviewAction(actionName);
    if (action === null) {
      return;
    }
    try {
      await this.client.reviewSuggestion(session.id, recordId, suggestionId, action);
      await this.refresh();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.toast(`That suggestion was already reviewed elsewhere. Refresh to see the latest state.`, () =>
          void this.refresh(),
        );
      } else {
        this.toast(`Review failed: ${describe(error)}`, () => void this.submitReview(suggestionId, actionName));
      }
      this.drawToasts();
    }
  }

  private async runIterate(schemaId: string): Promise<void> {
    const session = this.session;
    if (!session) {
      return;
    }
    try {
      await this.client.runNode(session.id, `iterate:${schemaId}`);
      await this.refresh();
    } catch (error) {
      this.toast(`Iterate failed: ${describe(error)}`, () => void this.runIterate(schemaId));
      this.drawToasts();
    }
  }

  private async refresh(): Promise<void> {
    const session = this.session;
    if (!session) {
      return;
    }
    this.session = await this.client.getSession(session.id);
    this.draw();
  }

  private drawToasts(): void {
    const container = this.root.querySelector<HTMLElement>(".toasts");
    if (!container) {
      return;
    }
    container.innerHTML = this.toasts
      .list()
      .map(
        (toast) =>
          `<div class="toast" data-toast-id="${toast.id}">${escapeHtml(toast.message)}` +
          (toast.retry !== null ? `<button data-toast-retry="${toast.id}">Retry</button>` : "") +
          `<button data-toast-dismiss="${toast.id}">Dismiss</button></div>`,
      )
      .join("");
    for (const button of container.querySelectorAll<HTMLButtonElement>("button[data-toast-retry]")) {
      button.addEventListener("click", () => this.toasts.retry(Number(button.dataset.toastRetry)));
    }
    for (const button of container.querySelectorAll<HTMLButtonElement>("button[data-toast-dismiss]")) {
      button.addEventListener("click", () => {
        this.toasts.dismiss(Number(button.dataset.toastDismiss));
        this.drawToasts();
      });
    }
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root !== null) {
    const baseUrl = root.dataset.serviceUrl ?? "http://127.0.0.1:8787";
    void new App(root, new ServiceClient(baseUrl)).start();
  }
}
