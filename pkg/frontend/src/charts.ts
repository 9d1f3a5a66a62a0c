/** Chart geometry (pure, unit-tested) and the thin SVG builders on top. */

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

/** Vertex positions for a radar polygon; axis 0 points straight up. */
export function radarPoints(
  values: number[],
  cx: number,
  cy: number,
  radius: number,
): Array<[number, number]> {
  const n = values.length;
  return values.map((v, i) => {
    const angle = -Math.PI / 2 + (2 * Math.PI * i) / n;
    const r = Math.max(0, Math.min(1, v)) * radius;
    return [cx + r * Math.cos(angle), cy + r * Math.sin(angle)];
  });
}

export function polygonAttribute(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}

/** SVG path for a sampled curve. */
export function curvePath(grid: number[], values: number[], xs: Scale, ys: Scale): string {
  return grid
    .map((x, i) => `${i === 0 ? "M" : "L"}${xs(x).toFixed(2)},${ys(values[i]).toFixed(2)}`)
    .join("");
}

export interface GaugeGeometry {
  fillWidth: number;
  thresholdX: number;
  aboveThreshold: boolean;
}

export function gaugeGeometry(
  probability: number,
  threshold: number,
  width: number,
): GaugeGeometry {
  const p = Math.max(0, Math.min(1, probability));
  return {
    fillWidth: p * width,
    thresholdX: Math.max(0, Math.min(1, threshold)) * width,
    aboveThreshold: p >= threshold,
  };
}

/** Importance shares converted to bar widths, largest first. */
export function importanceBars(
  features: string[],
  shares: number[],
  width: number,
): Array<{ feature: string; share: number; width: number }> {
  const order = shares
    .map((s, i) => [s, i] as [number, number])
    .sort((a, b) => b[0] - a[0] || a[1] - b[1]);
  const top = order[0]?.[0] || 1;
  return order.map(([share, i]) => ({
    feature: features[i],
    share,
    width: (share / (top || 1)) * width,
  }));
}

// ---------------------------------------------------------------------------
// DOM builders
// ---------------------------------------------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";

export function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
  children: Array<SVGElement | string> = [],
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  for (const child of children) {
    el.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return el;
}

export function renderGauge(
  probability: number,
  threshold: number,
  label: string,
): SVGSVGElement {
  const width = 320;
  const height = 46;
  const geo = gaugeGeometry(probability, threshold, width);
  const svg = svgElement("svg", { width, height, class: "gauge" });
  svg.append(
    svgElement("rect", { x: 0, y: 18, width, height: 16, class: "gauge-track" }),
    svgElement("rect", {
      x: 0, y: 18, width: geo.fillWidth, height: 16,
      class: geo.aboveThreshold ? "gauge-fill above" : "gauge-fill",
    }),
    svgElement("line", {
      x1: geo.thresholdX, x2: geo.thresholdX, y1: 12, y2: 40,
      class: "gauge-threshold",
    }),
    svgElement("text", { x: 0, y: 10, class: "gauge-label" },
               [`${label}: ${probability.toFixed(3)}`]),
  );
  return svg;
}

export interface RadarSeries {
  values: number[];
  className: string;
}

export function renderRadar(
  featureNames: string[],
  series: RadarSeries[],
  size = 340,
): SVGSVGElement {
  const cx = size / 2;
  const cy = size / 2;
  const radius = size / 2 - 58;
  const svg = svgElement("svg", { width: size, height: size, class: "radar" });
  for (const ring of [0.25, 0.5, 0.75, 1.0]) {
    svg.append(svgElement("polygon", {
      points: polygonAttribute(
        radarPoints(featureNames.map(() => ring), cx, cy, radius)),
      class: "radar-ring",
    }));
  }
  featureNames.forEach((name, i) => {
    const [x, y] = radarPoints(
      featureNames.map((_, j) => (j === i ? 1.08 : 0)), cx, cy, radius)[i];
    svg.append(svgElement("line", {
      x1: cx, y1: cy,
      x2: radarPoints(featureNames.map((_, j) => (j === i ? 1 : 0)),
                      cx, cy, radius)[i][0],
      y2: radarPoints(featureNames.map((_, j) => (j === i ? 1 : 0)),
                      cx, cy, radius)[i][1],
      class: "radar-spoke",
    }));
    const anchor = x < cx - 1 ? "end" : x > cx + 1 ? "start" : "middle";
    svg.append(svgElement("text", {
      x, y, "text-anchor": anchor, class: "radar-axis-label",
    }, [name]));
  });
  for (const s of series) {
    svg.append(svgElement("polygon", {
      points: polygonAttribute(radarPoints(s.values, cx, cy, radius)),
      class: `radar-series ${s.className}`,
    }));
  }
  return svg;
}

export interface CurveMarkers {
  patient: [number, number] | null;
  cohort: Array<[number, number]>;
  neighbors: Array<[number, number]>;
}

export function renderCurvePanel(
  title: string,
  grid: number[],
  values: number[],
  markers: CurveMarkers,
  width = 230,
  height = 150,
): SVGSVGElement {
  const pad = 22;
  const ysAll = values.concat(
    markers.cohort.map(([, y]) => y),
    markers.neighbors.map(([, y]) => y),
    markers.patient ? [markers.patient[1]] : [],
  );
  const yLo = Math.min(...ysAll);
  const yHi = Math.max(...ysAll);
  const yPadding = (yHi - yLo || 1) * 0.08;
  const xs = linearScale([grid[0], grid[grid.length - 1]], [pad, width - 6]);
  const ys = linearScale([yLo - yPadding, yHi + yPadding], [height - pad, 8]);
  const svg = svgElement("svg", { width, height, class: "pdp-panel" });
  svg.append(svgElement("text", { x: pad, y: 12, class: "pdp-title" }, [title]));
  const dot = (x: number, y: number, cls: string, r: number) =>
    svgElement("circle", { cx: xs(x), cy: ys(y), r, class: cls });
  for (const [x, y] of markers.cohort) svg.append(dot(x, y, "marker-cohort", 2));
  svg.append(svgElement("path", {
    d: curvePath(grid, values, xs, ys), class: "pdp-curve", fill: "none",
  }));
  for (const [x, y] of markers.neighbors) {
    svg.append(dot(x, y, "marker-neighbor", 3.2));
  }
  if (markers.patient) {
    svg.append(dot(markers.patient[0], markers.patient[1], "marker-patient", 4));
  }
  return svg;
}
