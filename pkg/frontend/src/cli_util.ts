import { mkdirSync, writeFileSync } from "fs";
import { dirname } from "path";
import { FigureSpec, loadSpec } from "./figspec";

export function parseArgs(argv: string[]): string {
  const i = argv.indexOf("--spec");
  if (i < 0 || i + 1 >= argv.length) {
    throw new Error("usage: --spec <path-to-figure-spec.json>");
  }
  return argv[i + 1];
}

export function runScript(
  argv: string[],
  expectedLayout: FigureSpec["layout"],
  render: (spec: FigureSpec) => string
): number {
  let spec: FigureSpec;
  try {
    spec = loadSpec(parseArgs(argv));
    if (spec.layout !== expectedLayout) {
      throw new Error(`this script renders '${expectedLayout}', spec says '${spec.layout}'`);
    }
    const svg = render(spec);
    mkdirSync(dirname(spec.output) || ".", { recursive: true });
    writeFileSync(spec.output, svg);
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 1;
  }
  console.error(`wrote ${spec.output}`);
  return 0;
}
