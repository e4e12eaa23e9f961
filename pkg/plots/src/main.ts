import { parseArgs } from "node:util";

import { renderFig1 } from "./fig1";
import { renderFig2 } from "./fig2";
import { renderFig3 } from "./fig3";
import { renderFig4 } from "./fig4";
import { InputError } from "./inputs";

const RENDERERS: Record<string, (dataDir: string, outDir: string) => string> = {
  fig1: renderFig1,
  fig2: renderFig2,
  fig3: renderFig3,
  fig4: renderFig4,
};

const USAGE =
  "usage: main.js --fig {fig1|fig2|fig3|fig4|all} [--data DIR] [--out DIR]";

export function run(argv: string[]): number {
  let values: { fig?: string; data?: string; out?: string };
  try {
    values = parseArgs({
      args: argv,
      options: {
        fig: { type: "string" },
        data: { type: "string", default: "out" },
        out: { type: "string", default: "out/figures" },
      },
    }).values;
  } catch (error) {
    console.error(String(error));
    console.error(USAGE);
    return 1;
  }
  const figure = values.fig ?? "all";
  const names = figure === "all" ? Object.keys(RENDERERS) : [figure];
  for (const name of names) {
    if (!(name in RENDERERS)) {
      console.error(`unknown figure: ${name}`);
      console.error(USAGE);
      return 1;
    }
  }
  try {
    for (const name of names) {
      const written = RENDERERS[name](values.data as string, values.out as string);
      console.log(written);
    }
  } catch (error) {
    if (error instanceof InputError) {
      console.error(`input error: ${error.message}`);
      return 2;
    }
    throw error;
  }
  return 0;
}

if (require.main === module) {
  process.exitCode = run(process.argv.slice(2));
}
