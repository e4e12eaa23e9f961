import * as path from "node:path";
import type { EChartsOption } from "echarts";

import { manifestSeed, readJson } from "./inputs";
import { baseOption, renderToSvg, writeSvg } from "./render";
import { theorySchema, TheoryPayload } from "./schemas";

/**
 * Expected-correct-matches bounds per group size: upper and lower curves
 * with the exact values overlaid as points.
 */
export function buildFig1(payload: TheoryPayload, seed: number | null): EChartsOption {
  const records = payload.derangement.records;
  const sizes = records.map((r) => r.n);
  return {
    ...baseOption("Expected correct matches per group: bounds and exact value", seed),
    legend: { bottom: 0 },
    grid: { left: 60, right: 30, top: 60, bottom: 60 },
    xAxis: {
      type: "category",
      name: "group size",
      nameLocation: "middle",
      nameGap: 28,
      data: sizes.map(String),
    },
    yAxis: {
      type: "value",
      name: "expected correct matches",
      nameLocation: "middle",
      nameGap: 40,
    },
    series: [
      {
        name: "upper bound",
        type: "line",
        data: records.map((r) => r.upper),
        symbol: "none",
        lineStyle: { type: "dashed" },
      },
      {
        name: "lower bound",
        type: "line",
        data: records.map((r) => r.lower),
        symbol: "none",
      },
      {
        name: "exact",
        type: "scatter",
        data: records.map((r) => r.exact),
        symbolSize: 9,
      },
    ],
  };
}

export function renderFig1(dataDir: string, outDir: string): string {
  const payload = readJson(path.join(dataDir, "theory.json"), theorySchema);
  const option = buildFig1(payload, manifestSeed(dataDir, "theory"));
  return writeSvg(path.join(outDir, "fig1.svg"), renderToSvg(option));
}
