import * as path from "node:path";
import type { EChartsOption } from "echarts";

import { manifestSeed, readCsv } from "./inputs";
import { baseOption, renderToSvg, writeSvg } from "./render";
import { AssignRow, assignRowSchema } from "./schemas";

/**
 * Proportion of entities correctly assigned by maximum likelihood versus
 * the noise strength c, with the closed-form curve for reference.
 */
export function buildFig2(rows: AssignRow[], seed: number | null): EChartsOption {
  const sorted = [...rows].sort((a, b) => a.c - b.c);
  return {
    ...baseOption("Correct assignment proportion vs noise strength", seed),
    legend: { bottom: 0 },
    grid: { left: 60, right: 30, top: 60, bottom: 60 },
    xAxis: {
      type: "value",
      name: "c",
      nameLocation: "middle",
      nameGap: 28,
    },
    yAxis: {
      type: "value",
      name: "proportion correct",
      nameLocation: "middle",
      nameGap: 40,
      min: 0,
      max: 1,
    },
    series: [
      {
        name: "simulation",
        type: "scatter",
        data: sorted.map((r) => [r.c, r.prop_correct]),
        symbolSize: 9,
      },
      {
        name: "theory",
        type: "line",
        data: sorted.map((r) => [r.c, r.theory]),
        symbol: "none",
      },
    ],
  };
}

export function renderFig2(dataDir: string, outDir: string): string {
  const rows = readCsv(path.join(dataDir, "assign_sim.csv"), assignRowSchema);
  const option = buildFig2(rows, manifestSeed(dataDir, "assign_sim"));
  return writeSvg(path.join(outDir, "fig2.svg"), renderToSvg(option));
}
