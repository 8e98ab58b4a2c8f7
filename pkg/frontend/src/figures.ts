/** Figure renderers: each kind maps input files to a deterministic SVG string. */

import { readFileSync } from "node:fs";
import * as echarts from "echarts";

import { numericColumn, readCsv, stringColumn } from "./csv.js";

const WIDTH = 760;
const HEIGHT = 480;

function renderOption(option: echarts.EChartsOption): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  chart.setOption({ animation: false, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return normalizeSvg(svg);
}

/**
 * zrender numbers element ids and class names from process-global counters,
 * so raw SSR output is not byte-stable across renders.  Remap every such
 * token to its order of first appearance.
 */
export function normalizeSvg(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-[a-z]*-?\d+/g, (tok) => {
    if (!seen.has(tok)) {
      seen.set(tok, `zr-n${seen.size}`);
    }
    return seen.get(tok)!;
  });
}

/** Hbar(P) from the Lax-Oleinik sweep with the oracle overlay. */
export function hbarCurve(sweepCsvPath: string): string {
  const t = readCsv(sweepCsvPath);
  const P = numericColumn(t, "P", sweepCsvPath);
  const lax = numericColumn(t, "Hbar_lax_oleinik", sweepCsvPath);
  const oracle = numericColumn(t, "Hbar_oracle", sweepCsvPath);
  return renderOption({
    title: { text: "effective Hamiltonian" },
    legend: { data: ["Lax-Oleinik", "oracle"], top: 28 },
    xAxis: { type: "value", name: "P" },
    yAxis: { type: "value", name: "Hbar(P)" },
    series: [
      { name: "Lax-Oleinik", type: "line", symbolSize: 8, data: P.map((p, i) => [p, lax[i]]) },
      {
        name: "oracle",
        type: "line",
        lineStyle: { type: "dashed" },
        symbol: "none",
        data: P.map((p, i) => [p, oracle[i]]),
      },
    ],
  });
}

/** Weak KAM profile v(x) with kink markers. */
export function weakKamProfile(solutionCsvPath: string): string {
  const t = readCsv(solutionCsvPath);
  const x = numericColumn(t, "x", solutionCsvPath);
  const v = numericColumn(t, "v", solutionCsvPath);
  const kink = numericColumn(t, "kink", solutionCsvPath);
  const kinks = x.filter((_, i) => kink[i] > 0).map((xi, j) => [xi, v[x.indexOf(xi)]]);
  return renderOption({
    title: { text: "weak KAM solution" },
    legend: { data: ["v(x)", "kink"], top: 28 },
    xAxis: { type: "value", name: "x", min: 0, max: 2 * Math.PI },
    yAxis: { type: "value", name: "v" },
    series: [
      { name: "v(x)", type: "line", symbol: "none", data: x.map((xi, i) => [xi, v[i]]) },
      { name: "kink", type: "scatter", symbolSize: 10, itemStyle: { color: "#c0392b" }, data: kinks },
    ],
  });
}

/** Wigner table heatmap over (x, eta); reads the JSON header sidecar. */
export function wignerHeatmap(tableCsvPath: string): string {
  const t = readCsv(tableCsvPath);
  const header = JSON.parse(
    readFileSync(tableCsvPath.replace(/\.csv$/, ".json"), "utf8"),
  ) as { n: number; N: number; hbar: number; eta_max: number };
  if (header.n !== 1) {
    throw new Error(`${tableCsvPath}: heatmap supports n=1 tables`);
  }
  const xi = numericColumn(t, "x_index", tableCsvPath);
  const kappa = numericColumn(t, "kappa", tableCsvPath);
  const value = numericColumn(t, "value", tableCsvPath);
  const xs = Array.from(new Set(xi)).sort((a, b) => a - b);
  const ks = Array.from(new Set(kappa)).sort((a, b) => a - b);
  const kIndex = new Map(ks.map((k, i) => [k, i]));
  const data = xi.map((j, r) => [j, kIndex.get(kappa[r])!, value[r]]);
  const lo = Math.min(...value);
  const hi = Math.max(...value);
  return renderOption({
    title: { text: `Wigner table (hbar=${header.hbar})` },
    grid: { right: 90 },
    xAxis: {
      type: "category",
      name: "x index",
      data: xs.map((v) => v.toString()),
    },
    yAxis: {
      type: "category",
      name: "eta",
      data: ks.map((k) => ((header.hbar * k) / 2).toFixed(3)),
    },
    visualMap: {
      min: lo,
      max: hi,
      calculable: false,
      orient: "vertical",
      right: 10,
      top: "center",
    },
    series: [{ type: "heatmap", data, progressive: 0 }],
  });
}

/** Log-log error decay from a limit/propagation report JSON. */
export function limitDecay(reportJsonPath: string): string {
  const rep = JSON.parse(readFileSync(reportJsonPath, "utf8")) as {
    scenario: string;
    hbars: number[];
    errors: number[];
    slope: number;
    pass: boolean;
  };
  for (const key of ["hbars", "errors", "slope"]) {
    if (!(key in rep)) {
      throw new Error(`${reportJsonPath}: schema mismatch, missing field '${key}'`);
    }
  }
  const pts = rep.hbars.map((h, i) => [h, Math.max(rep.errors[i], 1e-16)]);
  return renderOption({
    title: { text: `${rep.scenario} (slope ${rep.slope.toFixed(3)}, pass=${rep.pass})` },
    xAxis: { type: "log", name: "hbar" },
    yAxis: { type: "log", name: "pairing error" },
    series: [{ type: "line", symbolSize: 8, data: pts }],
  });
}

/** Quantum-vs-classical pairings per test function across the hbar sweep. */
export function propagationOverlay(pairingsCsvPath: string): string {
  const t = readCsv(pairingsCsvPath);
  const hbar = numericColumn(t, "hbar", pairingsCsvPath);
  const test = stringColumn(t, "test", pairingsCsvPath);
  const quantum = numericColumn(t, "wigner_pairing", pairingsCsvPath);
  const classical = numericColumn(t, "target_pairing", pairingsCsvPath);
  const labels = hbar.map((h, i) => `${test[i]}@${h}`);
  return renderOption({
    title: { text: "quantum vs classical pairings" },
    legend: { data: ["wigner", "push-forward"], top: 28 },
    grid: { bottom: 110 },
    xAxis: {
      type: "category",
      data: labels,
      axisLabel: { rotate: 60, fontSize: 9 },
    },
    yAxis: { type: "value", name: "pairing" },
    series: [
      { name: "wigner", type: "scatter", symbolSize: 8, data: quantum },
      { name: "push-forward", type: "scatter", symbol: "diamond", symbolSize: 8, data: classical },
    ],
  });
}

export const FIGURE_KINDS: Record<string, { inputs: number; render: (...paths: string[]) => string; describe: string }> = {
  "hbar-curve": { inputs: 1, render: hbarCurve, describe: "Hbar(P) sweep with oracle overlay (weakkam_sweep.csv)" },
  "weakkam-profile": { inputs: 1, render: weakKamProfile, describe: "v(x) with kink markers (weakkam_P*.csv)" },
  "wigner-heatmap": { inputs: 1, render: wignerHeatmap, describe: "Wigner table over (x, eta) (wigner CSV + JSON sidecar)" },
  "limit-decay": { inputs: 1, render: limitDecay, describe: "log-log error decay (limit/propagate report JSON)" },
  "propagation-overlay": { inputs: 1, render: propagationOverlay, describe: "quantum vs classical pairings (pairings CSV)" },
};
