/** Colorblind-safe dimension palette.
 *
 * Colors are assigned by dimension order within a schema, so the same
 * dimension id keeps the same color for the whole session. Text outside
 * any dimension renders in the neutral tone.
 */

export const DIMENSION_PALETTE: readonly string[] = [
  "#E69F00",
  "#56B4E9",
  "#009E73",
  "#F0E442",
  "#0072B2",
  "#D55E00",
  "#CC79A7",
];

export const NEUTRAL_COLOR = "#B0B0B8";

/** Map each dimension id to a palette color, in the given order, cycling if needed. */
export function assignDimensionColors(dimensionIds: readonly string[]): Map<string, string> {
  const colors = new Map<string, string>();
  dimensionIds.forEach((dimensionId, index) => {
    if (!colors.has(dimensionId)) {
      colors.set(dimensionId, DIMENSION_PALETTE[index % DIMENSION_PALETTE.length]);
    }
  });
  return colors;
}

export interface LegendEntry {
  label: string;
  color: string;
  neutral: boolean;
}

/** Legend rows for a set of dimensions plus the neutral entry. */
export function buildLegend(
  dimensions: ReadonlyArray<{ id: string; name: string }>,
  colors: Map<string, string>,
): LegendEntry[] {
  const entries: LegendEntry[] = dimensions.map((dimension) => ({
    label: dimension.name,
    color: colors.get(dimension.id) ?? NEUTRAL_COLOR,
    neutral: false,
  }));
  entries.push({ label: "No dimension", color: NEUTRAL_COLOR, neutral: true });
  return entries;
}
