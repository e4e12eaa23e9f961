import * as path from "node:path";
import type { EChartsOption } from "echarts";

import { InputError, manifestSeed, readCsv, readJson } from "./inputs";
import { baseOption, renderToSvg, writeSvg, STYLE } from "./render";
import {
  PopestRow,
  PopestSummary,
  popestRowSchema,
  popestSummarySchema,
} from "./schemas";

interface PanelSpec {
  title: string;
  yName: string;
  summaryKey: "mean_prop_correct" | "coverage" | "mse_n0" | "mse_nx";
}

const PANELS: PanelSpec[] = [
  { title: "proportion correct", yName: "proportion", summaryKey: "mean_prop_correct" },
  { title: "95% interval coverage", yName: "coverage", summaryKey: "coverage" },
  { title: "MSE of unobserved count", yName: "MSE", summaryKey: "mse_n0" },
  { title: "MSE of observed cells", yName: "MSE", summaryKey: "mse_nx" },
];

/**
 * Four-panel population-estimation summary over the noise grid: resolution
 * accuracy, interval coverage for the unobserved count, and the two mean
 * squared errors.  Summary statistics drive the lines; the replicate rows
 * supply the per-replicate scatter on the accuracy panel.
 */
export function buildFig4(
  rows: PopestRow[],
  summary: PopestSummary,
  seed: number | null,
): EChartsOption {
  const cs = Object.values(summary)
    .map((entry) => entry.c)
    .sort((a, b) => a - b);
  if (cs.length === 0) {
    throw new InputError("summary contains no noise levels");
  }
  const grids = [
    { left: "8%", right: "56%", top: "12%", bottom: "58%" },
    { left: "56%", right: "8%", top: "12%", bottom: "58%" },
    { left: "8%", right: "56%", top: "58%", bottom: "12%" },
    { left: "56%", right: "8%", top: "58%", bottom: "12%" },
  ];
  const option: EChartsOption = {
    ...baseOption("Population estimation under noisy entity resolution", seed),
    grid: grids,
    xAxis: [],
    yAxis: [],
    series: [],
  };
  const xAxes = option.xAxis as object[];
  const yAxes = option.yAxis as object[];
  const series = option.series as object[];
  PANELS.forEach((panel, index) => {
    xAxes.push({
      gridIndex: index,
      type: "value",
      name: "c",
      nameLocation: "middle",
      nameGap: 22,
      min: 0,
    });
    yAxes.push({
      gridIndex: index,
      type: "value",
      name: panel.yName,
      nameLocation: "middle",
      nameGap: 48,
    });
    const values = cs.map((c) => {
      const entry = Object.values(summary).find((e) => e.c === c);
      return [c, entry ? entry[panel.summaryKey] : NaN];
    });
    series.push({
      name: panel.title,
      type: "line",
      data: values,
      xAxisIndex: index,
      yAxisIndex: index,
      symbolSize: 8,
      color: STYLE.colors[index],
    });
  });
  // Per-replicate accuracy scatter behind the first panel's mean line.
  series.push({
    name: "replicates",
    type: "scatter",
    data: rows.filter((r) => r.failed === 0).map((r) => [r.c, r.prop_correct]),
    xAxisIndex: 0,
    yAxisIndex: 0,
    symbolSize: 3,
    itemStyle: { opacity: 0.25, color: STYLE.colors[0] },
  });
  return option;
}

export function renderFig4(dataDir: string, outDir: string): string {
  const rows = readCsv(path.join(dataDir, "popest_sim.csv"), popestRowSchema);
  const summary = readJson(
    path.join(dataDir, "popest_summary.json"),
    popestSummarySchema,
  );
  const option = buildFig4(rows, summary, manifestSeed(dataDir, "popest_sim"));
  return writeSvg(path.join(outDir, "fig4.svg"), renderToSvg(option));
}
