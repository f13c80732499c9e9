import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "magpic-figs-"));
}

export function writeErrorCsv(
  dir: string,
  name: string,
  rows: Array<[number, number, number, number, number, number, number]>
): string {
  const header = "eps,dt,n_paths,error1,error2,stderr1,stderr2";
  const body = rows.map((r) => r.join(",")).join("\n");
  const path = join(dir, name);
  writeFileSync(path, `${header}\n${body}\n`);
  return path;
}

export function syntheticErrorCsv(dir: string, name: string, slope = 1.0): string {
  const rows: Array<[number, number, number, number, number, number, number]> = [];
  for (let m = 1; m <= 6; m++) {
    const eps = 2 ** -m;
    rows.push([eps, 0.1047, 1, 0.3 * eps ** slope, 0.2 * eps ** slope, 0, 0]);
  }
  return writeErrorCsv(dir, name, rows);
}

export function writeSnapshot(
  dir: string,
  time: number,
  nx: number,
  ny: number,
  fill: (x: number, y: number) => number
): string {
  const xmin = -8;
  const xmax = 8;
  const ymin = -8;
  const ymax = 8;
  const hx = (xmax - xmin) / (nx - 1);
  const hy = (ymax - ymin) / (ny - 1);
  const buf = Buffer.alloc(8 * nx * ny);
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      buf.writeDoubleLE(fill(xmin + i * hx, ymin + j * hy), 8 * (i * ny + j));
    }
  }
  const base = join(dir, `rho_t${time.toFixed(6)}`);
  writeFileSync(`${base}.f64`, buf);
  writeFileSync(
    `${base}.json`,
    JSON.stringify({
      dtype: "<f8",
      layout: "row-major by x-index",
      nx,
      ny,
      xmin,
      xmax,
      ymin,
      ymax,
      time,
      version: "0.1.0",
    })
  );
  return `${base}.f64`;
}

export function writeSpec(dir: string, name: string, spec: unknown): string {
  const path = join(dir, name);
  writeFileSync(path, JSON.stringify(spec));
  return path;
}
