import * as fs from "node:fs";
import * as path from "node:path";
import Papa from "papaparse";
import { ZodType } from "zod";

import { manifestSchema } from "./schemas";

/** Raised for missing files, empty inputs, or rows that fail validation. */
export class InputError extends Error {}

export function readCsv<T>(filePath: string, schema: ZodType<T>): T[] {
  if (!fs.existsSync(filePath)) {
    throw new InputError(`no such file: ${filePath}`);
  }
  const text = fs.readFileSync(filePath, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const issue = parsed.errors[0];
    throw new InputError(`${filePath}: ${issue.message} (row ${issue.row})`);
  }
  if (parsed.data.length === 0) {
    throw new InputError(`${filePath}: no data rows`);
  }
  return parsed.data.map((row, index) => {
    const result = schema.safeParse(row);
    if (!result.success) {
      const first = result.error.issues[0];
      const where = first.path.join(".") || "row";
      throw new InputError(
        `${filePath}: row ${index + 1}: ${where}: ${first.message}`,
      );
    }
    return result.data;
  });
}

export function readJson<T>(filePath: string, schema: ZodType<T>): T {
  if (!fs.existsSync(filePath)) {
    throw new InputError(`no such file: ${filePath}`);
  }
  let payload: unknown;
  try {
    payload = JSON.parse(fs.readFileSync(filePath, "utf8"));
  } catch (error) {
    throw new InputError(`${filePath}: invalid JSON (${String(error)})`);
  }
  const result = schema.safeParse(payload);
  if (!result.success) {
    const first = result.error.issues[0];
    throw new InputError(
      `${filePath}: ${first.path.join(".") || "payload"}: ${first.message}`,
    );
  }
  return result.data;
}

/** Seed recorded by the producing run, for provenance labels; null if absent. */
export function manifestSeed(dataDir: string, subcommand: string): number | null {
  const file = path.join(dataDir, `${subcommand}_manifest.json`);
  if (!fs.existsSync(file)) {
    return null;
  }
  try {
    return readJson(file, manifestSchema).seed;
  } catch {
    return null;
  }
}
