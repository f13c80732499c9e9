import { viridis } from "./colormap";
import { FigureSpec } from "./figspec";
import { encodePng } from "./png";
import { Snapshot, readSnapshot } from "./snapshots";
import { Svg } from "./svg";

const TILE = 300;
const GAP = 26;
const MARGIN = 34;
const BAR_W = 18;

function heatmapPng(snap: Snapshot, lo: number, hi: number): Buffer {
  const { nx, ny } = snap.meta;
  const rgb = new Uint8Array(3 * nx * ny);
  const span = hi > lo ? hi - lo : 1;
  // Pixel rows run top-down; grid j runs bottom-up along y.
  for (let r = 0; r < ny; r++) {
    const j = ny - 1 - r;
    for (let c = 0; c < nx; c++) {
      const v = snap.values[c * ny + j];
      const [cr, cg, cb] = viridis((v - lo) / span);
      const k = 3 * (r * nx + c);
      rgb[k] = cr;
      rgb[k + 1] = cg;
      rgb[k + 2] = cb;
    }
  }
  return encodePng(nx, ny, rgb);
}

function colorbarPng(height: number): Buffer {
  const rgb = new Uint8Array(3 * height);
  for (let r = 0; r < height; r++) {
    const [cr, cg, cb] = viridis(1 - r / (height - 1));
    rgb[3 * r] = cr;
    rgb[3 * r + 1] = cg;
    rgb[3 * r + 2] = cb;
  }
  return encodePng(1, height, rgb);
}

/** Render up to four density snapshots as a grid with a shared color scale. */
export function renderDensityGrid(spec: FigureSpec): string {
  if (spec.inputs.length > 4) {
    throw new Error(`density-grid takes at most 4 snapshots, got ${spec.inputs.length}`);
  }
  const snaps = spec.inputs.map(readSnapshot);
  const first = snaps[0].meta;
  for (const s of snaps) {
    if (s.meta.nx !== first.nx || s.meta.ny !== first.ny) {
      throw new Error(
        `snapshot grids differ: ${first.nx}x${first.ny} vs ${s.meta.nx}x${s.meta.ny}`
      );
    }
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of snaps) {
    for (const v of s.values) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }

  const cols = snaps.length === 1 ? 1 : 2;
  const grid_rows = Math.ceil(snaps.length / 2);
  const width = MARGIN * 2 + cols * TILE + (cols - 1) * GAP + BAR_W + 58;
  const height = MARGIN * 2 + grid_rows * TILE + (grid_rows - 1) * GAP;
  const svg = new Svg(width, height);

  snaps.forEach((snap, k) => {
    const cx = MARGIN + (k % 2) * (TILE + GAP);
    const cy = MARGIN + Math.floor(k / 2) * (TILE + GAP);
    svg.imagePng(cx, cy, TILE, TILE, heatmapPng(snap, lo, hi));
    svg.rect(cx, cy, TILE, TILE, "fill:none;stroke:#333;stroke-width:1");
    svg.text(cx + 6, cy + 16, `t = ${snap.meta.time}`, "font:bold 13px sans-serif;fill:white");
    svg.text(cx, cy + TILE + 14, `x in [${snap.meta.xmin}, ${snap.meta.xmax}]`, "font:10px sans-serif");
  });

  const barX = MARGIN + cols * TILE + (cols - 1) * GAP + 20;
  const barH = grid_rows * TILE + (grid_rows - 1) * GAP;
  svg.imagePng(barX, MARGIN, BAR_W, barH, colorbarPng(256));
  svg.rect(barX, MARGIN, BAR_W, barH, "fill:none;stroke:#333;stroke-width:1");
  svg.text(barX + BAR_W + 4, MARGIN + 10, hi.toPrecision(3), "font:10px sans-serif");
  svg.text(barX + BAR_W + 4, MARGIN + barH, lo.toPrecision(3), "font:10px sans-serif");
  return svg.render();
}
