import * as path from "node:path";
import type { EChartsOption } from "echarts";

import { manifestSeed, readCsv } from "./inputs";
import { baseOption, boxStats, renderToSvg, writeSvg } from "./render";
import { LossRow, lossRowSchema } from "./schemas";

export interface LossGroup {
  inverseC: number;
  stats: ReturnType<typeof boxStats>;
}

/** Group the per-sweep losses by c and key each group by 1/c. */
export function groupLosses(rows: LossRow[]): LossGroup[] {
  const byC = new Map<number, number[]>();
  for (const row of rows) {
    const bucket = byC.get(row.c) ?? [];
    bucket.push(row.l0);
    byC.set(row.c, bucket);
  }
  return [...byC.entries()]
    .map(([c, losses]) => ({ inverseC: 1 / c, stats: boxStats(losses) }))
    .sort((a, b) => a.inverseC - b.inverseC);
}

/**
 * Boxplots of the posterior co-clustering loss.  The horizontal axis is the
 * reciprocal of the noise strength c, so resolution difficulty decreases
 * left to right.
 */
export function buildFig3(rows: LossRow[], seed: number | null): EChartsOption {
  const groups = groupLosses(rows);
  const categories = groups.map((g) => formatTick(g.inverseC));
  const outliers: [number, number][] = [];
  groups.forEach((group, index) => {
    for (const value of group.stats.outliers) {
      outliers.push([index, value]);
    }
  });
  return {
    ...baseOption("Posterior co-clustering loss vs 1/c", seed),
    grid: { left: 70, right: 30, top: 60, bottom: 60 },
    xAxis: {
      type: "category",
      name: "1/c",
      nameLocation: "middle",
      nameGap: 28,
      data: categories,
    },
    yAxis: {
      type: "value",
      name: "pairwise disagreements",
      nameLocation: "middle",
      nameGap: 50,
    },
    series: [
      {
        name: "posterior loss",
        type: "boxplot",
        data: groups.map((g) => [
          g.stats.low,
          g.stats.q1,
          g.stats.median,
          g.stats.q3,
          g.stats.high,
        ]),
      },
      {
        name: "outliers",
        type: "scatter",
        data: outliers,
        symbolSize: 4,
      },
    ],
  };
}

export function formatTick(value: number): string {
  return Number.isInteger(value) ? String(value) : String(Number(value.toFixed(4)));
}

export function renderFig3(dataDir: string, outDir: string): string {
  const rows = readCsv(path.join(dataDir, "bayes_sim.csv"), lossRowSchema);
  const option = buildFig3(rows, manifestSeed(dataDir, "bayes_sim"));
  return writeSvg(path.join(outDir, "fig3.svg"), renderToSvg(option));
}
