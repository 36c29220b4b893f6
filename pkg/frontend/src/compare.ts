/** Side-by-side comparison view-model for a generated/gold text pair.
 *
 * Paints both texts from their segment map: every character is covered by
 * exactly one run, runs carry the stable per-dimension color, and segments
 * without a dimension render in the neutral tone. A map that no longer
 * matches the texts is refused outright with a request to re-align rather
 * than rendered approximately.
 */

import type { SegmentMapView, SegmentSource, SegmentView } from "./api.js";
import { assignDimensionColors, buildLegend, LegendEntry, NEUTRAL_COLOR } from "./colors.js";

export interface PaintedRun {
  segmentId: string;
  start: number;
  end: number;
  text: string;
  dimension: string | null;
  color: string;
  hoverGroup: string | null;
  annotation: string;
}

export interface ComparisonViewModel {
  generated: PaintedRun[];
  gold: PaintedRun[];
  legend: LegendEntry[];
  fallback: boolean;
  showSentenceBoundaries: boolean;
}

export type ComparisonResult =
  | { kind: "ok"; view: ComparisonViewModel }
  | { kind: "stale"; reason: string; needsRealignment: true };

function stale(reason: string): ComparisonResult {
  return { kind: "stale", reason, needsRealignment: true };
}

function tilingError(segments: SegmentView[], text: string, source: SegmentSource): string | null {
  const sorted = [...segments].sort((a, b) => a.start - b.start);
  let cursor = 0;
  for (const segment of sorted) {
    if (segment.start !== cursor) {
      return `${source} segments leave characters [${cursor}, ${segment.start}) unpainted`;
    }
    if (segment.end < segment.start || segment.end > text.length) {
      return `${source} segment ${segment.id} spans [${segment.start}, ${segment.end}) outside the text`;
    }
    if (text.slice(segment.start, segment.end) !== segment.text) {
      return `${source} segment ${segment.id} no longer matches the text at [${segment.start}, ${segment.end})`;
    }
    cursor = segment.end;
  }
  if (cursor !== text.length) {
    return `${source} segments leave characters [${cursor}, ${text.length}) unpainted`;
  }
  return null;
}

/** Validate the map against both texts and paint the panes, or refuse. */
export function buildComparison(
  map: SegmentMapView,
  generatedText: string,
  goldText: string,
  dimensions: ReadonlyArray<{ id: string; name: string }>,
): ComparisonResult {
  if (map.generated_len !== generatedText.length) {
    return stale(
      `segment map expects a generated text of length ${map.generated_len}, got ${generatedText.length}; re-run alignment`,
    );
  }
  if (map.gold_len !== goldText.length) {
    return stale(
      `segment map expects a gold text of length ${map.gold_len}, got ${goldText.length}; re-run alignment`,
    );
  }
  const bySource: Record<SegmentSource, SegmentView[]> = { generated: [], gold: [] };
  for (const segment of map.segments) {
    bySource[segment.source].push(segment);
  }
  for (const [source, text] of [
    ["generated", generatedText],
    ["gold", goldText],
  ] as Array<[SegmentSource, string]>) {
    const problem = tilingError(bySource[source], text, source);
    if (problem !== null) {
      return stale(`${problem}; re-run alignment`);
    }
  }

  const dimensionNames = new Map(dimensions.map((dimension) => [dimension.name, dimension.id]));
  const colors = assignDimensionColors(dimensions.map((dimension) => dimension.id));
  const paint = (segments: SegmentView[]): PaintedRun[] =>
    [...segments]
      .sort((a, b) => a.start - b.start)
      .map((segment) => {
        const dimensionId = segment.dimension !== null ? (dimensionNames.get(segment.dimension) ?? null) : null;
        return {
          segmentId: segment.id,
          start: segment.start,
          end: segment.end,
          text: segment.text,
          dimension: segment.dimension,
          color: dimensionId !== null ? (colors.get(dimensionId) ?? NEUTRAL_COLOR) : NEUTRAL_COLOR,
          hoverGroup: segment.dimension,
          annotation: segment.annotation,
        };
      });

  return {
    kind: "ok",
    view: {
      generated: paint(bySource.generated),
      gold: paint(bySource.gold),
      legend: buildLegend(dimensions, colors),
      fallback: map.fallback,
      showSentenceBoundaries: map.fallback,
    },
  };
}

/** Segment ids in both panes sharing the hovered segment's dimension. */
export function linkedSegments(
  view: ComparisonViewModel,
  hoveredSegmentId: string,
): { generated: string[]; gold: string[] } {
  const hovered =
    view.generated.find((run) => run.segmentId === hoveredSegmentId) ??
    view.gold.find((run) => run.segmentId === hoveredSegmentId);
  if (!hovered || hovered.hoverGroup === null) {
    return { generated: [], gold: [] };
  }
  const matches = (runs: PaintedRun[]): string[] =>
    runs.filter((run) => run.hoverGroup === hovered.hoverGroup).map((run) => run.segmentId);
  return { generated: matches(view.generated), gold: matches(view.gold) };
}
