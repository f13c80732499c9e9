/** Small SVG document builder: enough for axes, markers, and images. */

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.raw(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" ` +
        `y2="${y2.toFixed(2)}" style="${style}"/>`
    );
  }

  polyline(pts: Array<[number, number]>, style: string): void {
    const p = pts.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.raw(`<polyline points="${p}" style="${style}" fill="none"/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.raw(`<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, style: string): void {
    this.raw(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" ` +
        `height="${h.toFixed(2)}" style="${style}"/>`
    );
  }

  text(x: number, y: number, s: string, style: string): void {
    this.raw(`<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" style="${style}">${esc(s)}</text>`);
  }

  imagePng(x: number, y: number, w: number, h: number, png: Buffer): void {
    const uri = `data:image/png;base64,${png.toString("base64")}`;
    this.raw(
      `<image x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" ` +
        `height="${h.toFixed(2)}" preserveAspectRatio="none" ` +
        `style="image-rendering:pixelated" href="${uri}"/>`
    );
  }

  render(): string {
    return (
      `<?xml version="1.0" encoding="UTF-8"?>\n` +
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      `\n</svg>\n`
    );
  }
}

export interface LogScale {
  toPx(value: number): number;
  min: number;
  max: number;
}

export function logScale(values: number[], pxLo: number, pxHi: number): LogScale {
  const finite = values.filter((v) => v > 0);
  if (finite.length === 0) {
    throw new Error("log scale needs at least one positive value");
  }
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo /= 2;
    hi *= 2;
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  return {
    min: lo,
    max: hi,
    toPx: (v: number) => pxLo + ((Math.log10(v) - llo) / (lhi - llo)) * (pxHi - pxLo),
  };
}

/** Powers of ten inside [min, max]. */
export function decadeTicks(scale: LogScale): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(scale.min) - 1e-9); e <= Math.floor(Math.log10(scale.max) + 1e-9); e++) {
    ticks.push(10 ** e);
  }
  return ticks;
}

/** Ordinary least squares slope of log(y) against log(x). */
export function logLogSlope(xs: number[], ys: number[]): number | null {
  const pts = xs
    .map((x, i) => [x, ys[i]] as const)
    .filter(([x, y]) => x > 0 && y > 0)
    .map(([x, y]) => [Math.log(x), Math.log(y)] as const);
  if (pts.length < 2) {
    return null;
  }
  const n = pts.length;
  const mx = pts.reduce((a, p) => a + p[0], 0) / n;
  const my = pts.reduce((a, p) => a + p[1], 0) / n;
  const sxx = pts.reduce((a, p) => a + (p[0] - mx) ** 2, 0);
  if (sxx === 0) {
    return null;
  }
  const sxy = pts.reduce((a, p) => a + (p[0] - mx) * (p[1] - my), 0);
  return sxy / sxx;
}
