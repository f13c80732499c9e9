import { readFileSync } from "fs";

export interface SnapshotMeta {
  dtype: string;
  layout: string;
  nx: number;
  ny: number;
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
  time: number;
  version?: string;
}

export interface Snapshot {
  meta: SnapshotMeta;
  /** value(i, j) with i the x node index; length nx*ny, row-major by x. */
  values: Float64Array;
}

function sidecarPath(binPath: string): string {
  return binPath.replace(/\.f64$/, ".json");
}

/** Read a density snapshot plus its JSON sidecar; sizes must agree. */
export function readSnapshot(binPath: string): Snapshot {
  if (!binPath.endsWith(".f64")) {
    throw new Error(`snapshot input must be a .f64 file: ${binPath}`);
  }
  let metaRaw: string;
  try {
    metaRaw = readFileSync(sidecarPath(binPath), "utf8");
  } catch {
    throw new Error(`missing sidecar for ${binPath}`);
  }
  const meta = JSON.parse(metaRaw) as SnapshotMeta;
  for (const key of ["nx", "ny", "xmin", "xmax", "ymin", "ymax", "time"]) {
    if (typeof (meta as unknown as Record<string, unknown>)[key] !== "number") {
      throw new Error(`sidecar for ${binPath} missing numeric field '${key}'`);
    }
  }
  if (meta.dtype !== "<f8") {
    throw new Error(`unsupported snapshot dtype '${meta.dtype}' in ${binPath}`);
  }
  const buf = readFileSync(binPath);
  if (buf.length !== meta.nx * meta.ny * 8) {
    throw new Error(
      `snapshot/sidecar mismatch for ${binPath}: ${buf.length} bytes, ` +
        `sidecar says ${meta.nx}x${meta.ny} float64`
    );
  }
  const values = new Float64Array(meta.nx * meta.ny);
  for (let k = 0; k < values.length; k++) {
    values[k] = buf.readDoubleLE(8 * k);
  }
  return { meta, values };
}
