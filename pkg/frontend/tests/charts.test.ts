import { describe, expect, it } from "vitest";

import {
  curvePath,
  gaugeGeometry,
  importanceBars,
  linearScale,
  polygonAttribute,
  radarPoints,
} from "../src/charts.js";

describe("linearScale", () => {
  it("maps domain endpoints to range endpoints", () => {
    const s = linearScale([0, 10], [100, 200]);
    expect(s(0)).toBe(100);
    expect(s(10)).toBe(200);
    expect(s(5)).toBe(150);
  });

  it("handles a degenerate domain without dividing by zero", () => {
    const s = linearScale([3, 3], [0, 50]);
    expect(Number.isFinite(s(3))).toBe(true);
  });
});

describe("radarPoints", () => {
  it("puts the first axis straight up", () => {
    const [first] = radarPoints([1, 1, 1, 1], 50, 50, 40);
    expect(first[0]).toBeCloseTo(50, 6);
    expect(first[1]).toBeCloseTo(10, 6);
  });

  it("produces one vertex per value and clamps to [0, 1]", () => {
    const pts = radarPoints([0.5, 2.0, -1.0], 0, 0, 10);
    expect(pts).toHaveLength(3);
    const radii = pts.map(([x, y]) => Math.hypot(x, y));
    expect(radii[0]).toBeCloseTo(5, 6);
    expect(radii[1]).toBeCloseTo(10, 6);
    expect(radii[2]).toBeCloseTo(0, 6);
  });

  it("renders as a space-separated attribute string", () => {
    const attr = polygonAttribute(radarPoints([1, 1], 0, 0, 10));
    expect(attr.split(" ")).toHaveLength(2);
    expect(attr).toMatch(/^-?\d+\.\d{2},-?\d+\.\d{2} /);
  });
});

describe("curvePath", () => {
  it("starts with a move and continues with lines", () => {
    const xs = linearScale([0, 2], [0, 100]);
    const ys = linearScale([0, 1], [100, 0]);
    const d = curvePath([0, 1, 2], [0, 0.5, 1], xs, ys);
    expect(d).toBe("M0.00,100.00L50.00,50.00L100.00,0.00");
  });
});

describe("gaugeGeometry", () => {
  it("scales the fill and threshold marker with width", () => {
    const g = gaugeGeometry(0.25, 0.5, 200);
    expect(g.fillWidth).toBe(50);
    expect(g.thresholdX).toBe(100);
    expect(g.aboveThreshold).toBe(false);
  });

  it("flags probabilities at or above the threshold", () => {
    expect(gaugeGeometry(0.5, 0.5, 100).aboveThreshold).toBe(true);
    expect(gaugeGeometry(1.2, 0.5, 100).fillWidth).toBe(100);
  });
});

describe("importanceBars", () => {
  it("sorts by share descending with the widest bar first", () => {
    const bars = importanceBars(["a", "b", "c"], [0.2, 0.5, 0.3], 100);
    expect(bars.map((b) => b.feature)).toEqual(["b", "c", "a"]);
    expect(bars[0].width).toBe(100);
    expect(bars[2].width).toBeCloseTo(40, 6);
  });

  it("breaks ties by original order", () => {
    const bars = importanceBars(["a", "b"], [0.5, 0.5], 10);
    expect(bars.map((b) => b.feature)).toEqual(["a", "b"]);
  });
});
