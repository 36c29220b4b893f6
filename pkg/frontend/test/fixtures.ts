/** Fixture loaders for the frontend tests.
 *
 * session_before.json and session_after.json are verbatim service responses
 * captured by scripts/capture_fixtures.py: a full session after contrast and
 * alignment (one pending suggestion), and the same session after accepting
 * that suggestion and running an iteration (revision 1 exists). Loaders
 * return fresh copies so tests can mutate freely.
 */

import { readFileSync } from "node:fs";
import type { CellView, MatrixData, SessionView } from "../src/api.js";

function load(name: string): SessionView {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as SessionView;
}

export function sessionBefore(): SessionView {
  return load("session_before.json");
}

export function sessionAfter(): SessionView {
  return load("session_after.json");
}

export function cell(overrides: Partial<CellView> = {}): CellView {
  return {
    judgment: "Yes",
    snippet: "quoted evidence",
    explanation: "Explains the judgment.",
    verification: "verified",
    verified_span: null,
    ...overrides,
  };
}

/** A rows-by-columns matrix with every cell verified Yes. */
export function matrixOf(rowCount: number, columnCount: number): MatrixData {
  const rowIds = Array.from({ length: rowCount }, (_, index) => `e${index + 1}`);
  const columnIds = Array.from({ length: columnCount }, (_, index) => `f${index + 1}`);
  const cells: Record<string, Record<string, CellView>> = {};
  for (const rowId of rowIds) {
    cells[rowId] = {};
    for (const columnId of columnIds) {
      cells[rowId][columnId] = cell();
    }
  }
  return {
    row_ids: rowIds,
    column_ids: columnIds,
    column_labels: columnIds.map((columnId) => `Feature ${columnId}`),
    cells,
  };
}
