/** HTML renderers for the canvas, panels, comparison view, and review rows.
 *
 * Renderers are pure string builders over view-models so they can be
 * tested without a browser; the entry point mounts their output and wires
 * event handlers by data attributes.
 */

import type { CanvasModel, CanvasNode } from "./canvas.js";
import type { CellDetail, MatrixViewModel } from "./matrix.js";
import type { ComparisonResult, PaintedRun } from "./compare.js";
import type { DiffEntry } from "./schemaDiff.js";
import type { ReviewRow } from "./review.js";
import type { LegendEntry } from "./colors.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function nodeHtml(node: CanvasNode): string {
  const classes = ["canvas-node", `kind-${node.kind}`];
  if (node.selected) {
    classes.push("selected");
  }
  const parent = node.parentId !== null ? ` data-parent="${escapeHtml(node.parentId)}"` : "";
  return [
    `<div class="${classes.join(" ")}" data-node-id="${escapeHtml(node.id)}"${parent}>`,
    `<span class="node-label">${escapeHtml(node.label)}</span>`,
    `<span class="status-badge status-${node.statusBadge.toLowerCase()}">${node.statusBadge}</span>`,
    `</div>`,
  ].join("");
}

export function renderCanvas(model: CanvasModel): string {
  const nodes = model.nodes.map(nodeHtml).join("\n");
  return `<div class="canvas">\n${nodes}\n</div>`;
}

export function renderMatrixPanel(vm: MatrixViewModel): string {
  const header = ["<tr><th></th>", ...vm.columnLabels.map((label) => `<th>${escapeHtml(label)}</th>`), "</tr>"].join(
    "",
  );
  const bodyRows = vm.visibleRows.map((row, index) => {
    const rowId = vm.visibleRowIds[index];
    const cells = row.map((cell) => {
      const glyph = cell.warning ? '<span class="warning-glyph" title="snippet could not be verified">&#9888;</span>' : "";
      const judgment = cell.judgment ?? "&mdash;";
      return [
        `<td class="matrix-cell verification-${cell.verification}"`,
        ` data-row="${escapeHtml(cell.rowId)}" data-column="${escapeHtml(cell.columnId)}">`,
        `${judgment}${glyph}</td>`,
      ].join("");
    });
    return `<tr><th>${escapeHtml(rowId)}</th>${cells.join("")}</tr>`;
  });
  const note = vm.virtualized
    ? `<p class="virtualization-note">Showing rows ${vm.windowStart + 1}&ndash;${
        vm.windowStart + vm.visibleRowIds.length
      } of ${vm.rowIds.length}.</p>`
    : "";
  return `<table class="evidence-matrix"><thead>${header}</thead><tbody>${bodyRows.join("\n")}</tbody></table>${note}`;
}

export function renderCellDetail(detail: CellDetail): string {
  const parts = [`<div class="cell-detail">`];
  if (detail.warning) {
    parts.push(`<p class="cell-warning">&#9888; The snippet could not be verified in the source.</p>`);
  }
  parts.push(`<p class="cell-explanation">${escapeHtml(detail.explanation)}</p>`);
  if (detail.snippet !== null) {
    parts.push(`<blockquote class="cell-snippet">${escapeHtml(detail.snippet)}</blockquote>`);
  }
  if (detail.highlight !== null) {
    parts.push(
      [
        `<p class="cell-source">`,
        escapeHtml(detail.highlight.before),
        `<mark data-start="${detail.highlight.start}" data-end="${detail.highlight.end}">`,
        escapeHtml(detail.highlight.match),
        `</mark>`,
        escapeHtml(detail.highlight.after),
        `</p>`,
      ].join(""),
    );
  }
  parts.push(`</div>`);
  return parts.join("\n");
}

function runHtml(run: PaintedRun, boundaries: boolean): string {
  const classes = ["segment-run"];
  if (boundaries) {
    classes.push("sentence-boundary");
  }
  const hover = run.hoverGroup !== null ? ` data-hover-group="${escapeHtml(run.hoverGroup)}"` : "";
  return [
    `<span class="${classes.join(" ")}" style="background-color: ${run.color}"`,
    ` data-segment-id="${escapeHtml(run.segmentId)}" data-start="${run.start}" data-end="${run.end}"${hover}>`,
    `${escapeHtml(run.text)}</span>`,
  ].join("");
}

export function renderLegend(entries: LegendEntry[]): string {
  const items = entries.map(
    (entry) =>
      `<li class="${entry.neutral ? "legend-neutral" : "legend-dimension"}">` +
      `<span class="swatch" style="background-color: ${entry.color}"></span>${escapeHtml(entry.label)}</li>`,
  );
  return `<ul class="legend">${items.join("")}</ul>`;
}

export function renderComparison(result: ComparisonResult): string {
  if (result.kind === "stale") {
    return [
      `<div class="comparison-stale">`,
      `<p>${escapeHtml(result.reason)}</p>`,
      `<button data-action="realign">Re-run alignment</button>`,
      `</div>`,
    ].join("\n");
  }
  const view = result.view;
  const pane = (title: string, runs: PaintedRun[]): string =>
    `<div class="compare-pane"><h3>${escapeHtml(title)}</h3><p class="painted-text">${runs
      .map((run) => runHtml(run, view.showSentenceBoundaries))
      .join("")}</p></div>`;
  return [
    `<div class="comparison${view.fallback ? " fallback" : ""}">`,
    pane("Generated", view.generated),
    pane("Reference", view.gold),
    renderLegend(view.legend),
    `</div>`,
  ].join("\n");
}

export function renderReviewRows(rows: ReviewRow[]): string {
  const items = rows.map((row) => {
    const disabled = row.actionsEnabled ? "" : " disabled";
    const buttons = ["Accept", "Reject", "Edit"]
      .map(
        (action) =>
          `<button data-action="${action.toLowerCase()}" data-suggestion-id="${escapeHtml(
            row.suggestionId,
          )}"${disabled}>${action}</button>`,
      )
      .join("");
    return [
      `<tr class="review-row status-${row.status}"${row.reviewed ? ' data-reviewed="true"' : ""}>`,
      `<td class="tag">${escapeHtml(row.tag)}</td>`,
      `<td class="target">${escapeHtml(row.targetLabel)}</td>`,
      `<td class="text">${escapeHtml(row.text)}</td>`,
      `<td class="actions">${buttons}</td>`,
      `</tr>`,
    ].join("");
  });
  return `<table class="review"><tbody>${items.join("\n")}</tbody></table>`;
}

export function renderDiff(entries: DiffEntry[]): string {
  if (entries.length === 0) {
    return `<p class="diff-empty">No structural changes between these revisions.</p>`;
  }
  const items = entries.map(
    (entry) => `<li class="diff-entry kind-${entry.kind}">${escapeHtml(entry.text)}</li>`,
  );
  return `<ul class="schema-diff">${items.join("")}</ul>`;
}
