import { describe, expect, it } from "vitest";

import {
  AGENT_STATUS_COLORS, buildingStyle, coverageColor, TACTIC_STATUS_COLORS,
} from "./colors.js";

describe("status color schemes", () => {
  it("agent colors match the server scheme exactly", () => {
    expect(AGENT_STATUS_COLORS).toEqual({
      idle: "green",
      killed: "orange",
      disabled: "red",
      tasked: "blue",
      unknown: "orange",
    });
  });

  it("tactic colors match the server scheme exactly", () => {
    expect(TACTIC_STATUS_COLORS).toEqual({
      pending: "black",
      "in-progress": "blue",
      failed: "red",
      completed: "green",
    });
  });
});

describe("building styling", () => {
  const base = { confirmed: false, contains_threat: false,
                 contains_intel: false };

  it("unconfirmed a-priori footprint renders checkerboard", () => {
    expect(buildingStyle(base).checkerboard).toBe(true);
    expect(buildingStyle({ ...base, confirmed: true }).checkerboard).toBe(false);
  });

  it("threat tints red, intel tints blue, threat wins", () => {
    expect(buildingStyle({ ...base, contains_threat: true }).tint).toBe("red");
    expect(buildingStyle({ ...base, contains_intel: true }).tint).toBe("blue");
    expect(buildingStyle({ ...base, contains_threat: true,
                           contains_intel: true }).tint).toBe("red");
    expect(buildingStyle(base).tint).toBeNull();
  });
});

describe("coverage palette", () => {
  it("never-seen cells draw nothing", () => {
    expect(coverageColor(-1)).toBeNull();
  });

  it("fully stale cells flip to magenta", () => {
    expect(coverageColor(1)).toContain("255,0,255");
  });

  it("aging cells fade toward sepia", () => {
    expect(coverageColor(0.1)).toContain("80,200,120");
    expect(coverageColor(0.9)).toContain("112,66,20");
  });
});
