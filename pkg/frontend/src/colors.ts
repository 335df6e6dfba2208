/** Status color schemes. These must match the server's mappings exactly. */

export const AGENT_STATUS_COLORS: Record<string, string> = {
  idle: "green",
  killed: "orange",
  disabled: "red",
  tasked: "blue",
  unknown: "orange",
};

export const TACTIC_STATUS_COLORS: Record<string, string> = {
  pending: "black",
  "in-progress": "blue",
  failed: "red",
  completed: "green",
};

export interface BuildingStyle {
  checkerboard: boolean; // unconfirmed a-priori footprint
  tint: "red" | "blue" | null; // threat / intel
}

export function buildingStyle(b: { confirmed: boolean; contains_threat: boolean;
                                   contains_intel: boolean }): BuildingStyle {
  return {
    checkerboard: !b.confirmed,
    tint: b.contains_threat ? "red" : b.contains_intel ? "blue" : null,
  };
}

/**
 * Coverage cell color from staleness f in [0, 1]; negative values mean
 * never-seen and render nothing. Fresh cells keep full color, aging cells
 * fade to sepia, fully stale cells (f = 1) flip to magenta.
 */
export function coverageColor(staleness: number): string | null {
  if (staleness < 0) return null;
  if (staleness >= 1) return "rgba(255,0,255,0.45)";
  const alpha = 0.35 * (1 - staleness) + 0.1;
  if (staleness < 0.5) return `rgba(80,200,120,${alpha.toFixed(3)})`;
  return `rgba(112,66,20,${alpha.toFixed(3)})`; // sepia
}
