import { readFileSync, existsSync } from "fs";
import { z } from "zod";

export const FigureSpecSchema = z
  .object({
    layout: z.enum(["error-panel", "density-grid"]),
    inputs: z.array(z.string()).min(1),
    output: z.string().min(1),
    labels: z.array(z.string()).optional(),
  })
  .strict();

export type FigureSpec = z.infer<typeof FigureSpecSchema>;

/** Load and validate a figure spec; every input path must exist. */
export function loadSpec(path: string): FigureSpec {
  let raw: string;
  try {
    raw = readFileSync(path, "utf8");
  } catch {
    throw new Error(`spec file not found: ${path}`);
  }
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch (e) {
    throw new Error(`spec is not valid JSON: ${(e as Error).message}`);
  }
  const parsed = FigureSpecSchema.safeParse(data);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    throw new Error(`invalid spec: ${issue.path.join(".") || "root"}: ${issue.message}`);
  }
  for (const input of parsed.data.inputs) {
    if (!existsSync(input)) {
      throw new Error(`input does not exist: ${input}`);
    }
  }
  if (parsed.data.labels && parsed.data.labels.length !== parsed.data.inputs.length) {
    throw new Error("labels must match inputs one-to-one");
  }
  return parsed.data;
}
