import { basename } from "path";
import { ErrorTable, readErrorTable } from "./csv";
import { FigureSpec } from "./figspec";
import { Svg, decadeTicks, logLogSlope, logScale } from "./svg";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const PANEL_W = 380;
const PANEL_H = 340;
const MARGIN = { left: 64, right: 16, top: 34, bottom: 46 };

interface Series {
  label: string;
  table: ErrorTable;
}

function drawPanel(
  svg: Svg,
  x0: number,
  y0: number,
  series: Series[],
  component: 1 | 2,
  abscissa: "eps" | "dt"
): void {
  const xs = series.flatMap((s) => s.table.rows.map((r) => r[abscissa]));
  const key = component === 1 ? "error1" : "error2";
  const ys = series.flatMap((s) =>
    s.table.rows.map((r) => (component === 1 ? r.error1 : r.error2)).filter((v) => v > 0)
  );
  if (ys.length === 0) {
    throw new Error(`component ${component}: every error is zero, nothing to plot on a log axis`);
  }
  const plotL = x0 + MARGIN.left;
  const plotR = x0 + PANEL_W - MARGIN.right;
  const plotT = y0 + MARGIN.top;
  const plotB = y0 + PANEL_H - MARGIN.bottom;
  const sx = logScale(xs, plotL, plotR);
  const sy = logScale(ys, plotB, plotT);

  svg.rect(plotL, plotT, plotR - plotL, plotB - plotT, "fill:none;stroke:#333;stroke-width:1");
  for (const t of decadeTicks(sx)) {
    const px = sx.toPx(t);
    svg.line(px, plotB, px, plotT, "stroke:#ddd;stroke-width:0.5");
    svg.text(px - 12, plotB + 16, `1e${Math.round(Math.log10(t))}`, "font:10px sans-serif");
  }
  for (const t of decadeTicks(sy)) {
    const py = sy.toPx(t);
    svg.line(plotL, py, plotR, py, "stroke:#ddd;stroke-width:0.5");
    svg.text(x0 + 14, py + 3, `1e${Math.round(Math.log10(t))}`, "font:10px sans-serif");
  }
  svg.text(
    (plotL + plotR) / 2 - 10,
    y0 + PANEL_H - 10,
    abscissa === "eps" ? "epsilon" : "dt",
    "font:italic 12px sans-serif"
  );
  svg.text(x0 + 8, y0 + 18, `error_${component}`, "font:bold 13px sans-serif");

  series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    const pts = s.table.rows
      .map((r) => [r[abscissa], component === 1 ? r.error1 : r.error2] as [number, number])
      .filter(([, y]) => y > 0)
      .sort((a, b) => a[0] - b[0]);
    svg.polyline(
      pts.map(([x, y]) => [sx.toPx(x), sy.toPx(y)]),
      `stroke:${color};stroke-width:1.5`
    );
    for (const [x, y] of pts) {
      svg.circle(sx.toPx(x), sy.toPx(y), 3, color);
    }
    const slope = logLogSlope(pts.map((p) => p[0]), pts.map((p) => p[1]));
    const label = slope === null ? s.label : `${s.label} (slope ${slope.toFixed(2)})`;
    svg.text(plotL + 8, plotT + 16 + 14 * k, label, `font:11px sans-serif;fill:${color}`);

    if (k === 0 && slope !== null && pts.length >= 2) {
      // Dashed guide with the nearest half-integer slope, anchored mid-data.
      const guide = Math.max(0.5, Math.round(slope * 2) / 2);
      const [xa, ya] = pts[Math.floor(pts.length / 2)];
      const xb = pts[pts.length - 1][0];
      const yb = ya * (xb / xa) ** guide;
      svg.polyline(
        [
          [sx.toPx(xa), sy.toPx(ya * 1.5)],
          [sx.toPx(xb), sy.toPx(yb * 1.5)],
        ],
        "stroke:#888;stroke-width:1;stroke-dasharray:5 3"
      );
      svg.text(sx.toPx(xb) - 60, sy.toPx(yb * 1.5) - 6, `guide ~${guide}`, "font:10px sans-serif;fill:#888");
    }
  });
}

/** Render log-log error panels (one per component) from error tables. */
export function renderErrorPanels(spec: FigureSpec): string {
  const series: Series[] = spec.inputs.map((input, k) => ({
    label: spec.labels?.[k] ?? basename(input).replace(/\.csv$/, ""),
    table: readErrorTable(input),
  }));
  const abscissa = series[0].table.abscissa;
  for (const s of series) {
    if (s.table.abscissa !== abscissa) {
      throw new Error("all inputs must sweep the same abscissa (eps or dt)");
    }
  }
  const svg = new Svg(2 * PANEL_W + 24, PANEL_H);
  drawPanel(svg, 0, 0, series, 1, abscissa);
  drawPanel(svg, PANEL_W + 24, 0, series, 2, abscissa);
  return svg.render();
}
