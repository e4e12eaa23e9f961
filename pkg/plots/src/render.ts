import * as fs from "node:fs";
import * as path from "node:path";
import * as echarts from "echarts";

/** Shared style so every figure renders identically run to run. */
export const STYLE = {
  colors: ["#33658a", "#f26419", "#2f9c5c", "#86498f", "#c7a41d"],
  fontFamily: "sans-serif",
  titleSize: 15,
  subtitleSize: 11,
  width: 880,
  height: 640,
};

export function baseOption(
  title: string,
  seed: number | null,
): echarts.EChartsOption {
  return {
    animation: false,
    color: STYLE.colors,
    textStyle: { fontFamily: STYLE.fontFamily },
    title: {
      text: title,
      subtext: seed === null ? undefined : `seed ${seed}`,
      left: "center",
      textStyle: { fontSize: STYLE.titleSize },
      subtextStyle: { fontSize: STYLE.subtitleSize },
    },
  };
}

export function renderToSvg(
  option: echarts.EChartsOption,
  width: number = STYLE.width,
  height: number = STYLE.height,
): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  chart.setOption(option);
  const svg = chart.renderToSVGString();
  chart.dispose();
  return canonicalizeIds(svg);
}

/**
 * Class names embed process-global counters (chart instance and style ids);
 * renumber them by first appearance so the same option always yields
 * byte-identical SVG, in any process.
 */
function canonicalizeIds(svg: string): string {
  const mapping = new Map<string, string>();
  return svg
    .replace(/\bzr\d+-/g, "zr-")
    .replace(/zr-cls-\d+/g, (token) => {
      let mapped = mapping.get(token);
      if (mapped === undefined) {
        mapped = `zr-cls-${mapping.size}`;
        mapping.set(token, mapped);
      }
      return mapped;
    });
}

export function writeSvg(filePath: string, svg: string): string {
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, svg, "utf8");
  return filePath;
}

/** Quantile with linear interpolation between order statistics. */
export function quantile(sorted: number[], q: number): number {
  if (sorted.length === 0) {
    throw new Error("quantile of empty sample");
  }
  const position = (sorted.length - 1) * q;
  const low = Math.floor(position);
  const high = Math.ceil(position);
  if (low === high) {
    return sorted[low];
  }
  return sorted[low] + (position - low) * (sorted[high] - sorted[low]);
}

export interface BoxStats {
  low: number;
  q1: number;
  median: number;
  q3: number;
  high: number;
  outliers: number[];
}

/** Tukey box: whiskers at the most extreme points within 1.5 IQR. */
export function boxStats(values: number[]): BoxStats {
  const sorted = [...values].sort((a, b) => a - b);
  const q1 = quantile(sorted, 0.25);
  const median = quantile(sorted, 0.5);
  const q3 = quantile(sorted, 0.75);
  const iqr = q3 - q1;
  const lowFence = q1 - 1.5 * iqr;
  const highFence = q3 + 1.5 * iqr;
  const inside = sorted.filter((v) => v >= lowFence && v <= highFence);
  return {
    low: inside[0],
    q1,
    median,
    q3,
    high: inside[inside.length - 1],
    outliers: sorted.filter((v) => v < lowFence || v > highFence),
  };
}
