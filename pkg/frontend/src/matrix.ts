/** Evidence-matrix panel view-model.
 *
 * Renders judgment matrices as exact rows-by-columns grids. Cells whose
 * snippet could not be verified carry a warning glyph; clicking a cell
 * reveals its explanation and snippet with the verified span highlighted
 * in the source text. Rows virtualize beyond a window to keep large
 * example sets responsive.
 */

import type { CellView, Judgment, MatrixData, Verification } from "./api.js";

export const ROW_VIRTUALIZATION_LIMIT = 50;

export interface MatrixCell {
  rowId: string;
  columnId: string;
  judgment: Judgment | null;
  verification: Verification;
  warning: boolean;
  hasEvidence: boolean;
}

export interface MatrixViewModel {
  rowIds: string[];
  columnIds: string[];
  columnLabels: string[];
  rows: MatrixCell[][];
  totalCells: number;
  virtualized: boolean;
  windowStart: number;
  visibleRowIds: string[];
  visibleRows: MatrixCell[][];
}

const EMPTY_CELL: CellView = {
  judgment: null,
  snippet: null,
  explanation: "",
  verification: "unchecked",
  verified_span: null,
};

function cellOf(matrix: MatrixData, rowId: string, columnId: string): CellView {
  const row = matrix.cells[rowId];
  if (!row) {
    return EMPTY_CELL;
  }
  return row[columnId] ?? EMPTY_CELL;
}

/** Build the grid for a matrix, windowed at `windowStart` when virtualized. */
export function buildMatrixView(
  matrix: MatrixData,
  windowStart = 0,
  windowSize = ROW_VIRTUALIZATION_LIMIT,
): MatrixViewModel {
  const rows = matrix.row_ids.map((rowId) =>
    matrix.column_ids.map((columnId) => {
      const cell = cellOf(matrix, rowId, columnId);
      return {
        rowId,
        columnId,
        judgment: cell.judgment,
        verification: cell.verification,
        warning: cell.verification === "unverifiable",
        hasEvidence: cell.snippet !== null,
      };
    }),
  );
  const virtualized = matrix.row_ids.length > windowSize;
  const start = virtualized ? Math.min(windowStart, Math.max(0, matrix.row_ids.length - windowSize)) : 0;
  const end = virtualized ? start + windowSize : matrix.row_ids.length;
  return {
    rowIds: [...matrix.row_ids],
    columnIds: [...matrix.column_ids],
    columnLabels: [...matrix.column_labels],
    rows,
    totalCells: matrix.row_ids.length * matrix.column_ids.length,
    virtualized,
    windowStart: start,
    visibleRowIds: matrix.row_ids.slice(start, end),
    visibleRows: rows.slice(start, end),
  };
}

export interface SpanHighlight {
  before: string;
  match: string;
  after: string;
  start: number;
  end: number;
}

export interface CellDetail {
  explanation: string;
  snippet: string | null;
  verification: Verification;
  warning: boolean;
  highlight: SpanHighlight | null;
}

/** Detail panel content for one cell, splitting the source at the verified span. */
export function cellDetail(matrix: MatrixData, rowId: string, columnId: string, sourceText: string): CellDetail {
  const cell = cellOf(matrix, rowId, columnId);
  let highlight: SpanHighlight | null = null;
  if (cell.verified_span !== null) {
    const [start, end] = cell.verified_span;
    if (start >= 0 && end >= start && end <= sourceText.length) {
      highlight = {
        before: sourceText.slice(0, start),
        match: sourceText.slice(start, end),
        after: sourceText.slice(end),
        start,
        end,
      };
    }
  }
  return {
    explanation: cell.explanation,
    snippet: cell.snippet,
    verification: cell.verification,
    warning: cell.verification === "unverifiable",
    highlight,
  };
}
