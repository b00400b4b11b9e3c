/** Sufficient-horizon sweep figure: one curve per (method, terminal) pair. */

import { SweepRow } from "./csv.js";
import { drawAxes, linearScale, logScale, SvgCanvas } from "./svg.js";

// method families: stage-cost-measure analyses in blue, storage-measure in
// red, coarse bounds in grey; terminal variant sets the line style
const METHOD_COLOR: Record<string, string> = {
  tight_stage: "#1f5fbf",
  tight_stage_terminal: "#1f5fbf",
  tight_storage: "#c02020",
  tight_storage_terminal: "#c02020",
  coarse: "#666666",
  coarse_terminal: "#666666",
  lp: "#168a4a",
  lp_terminal: "#168a4a",
};

const TERMINAL_DASH: Record<string, string> = {
  none: "",
  scaled: "7,4",
  finite_tail: "2,3",
};

export interface SweepFigureOptions {
  width?: number;
  height?: number;
  logX?: boolean;
  title?: string;
}

interface Series {
  key: string;
  color: string;
  dash: string;
  points: Array<[number, number]>;
}

export function renderHorizonSweep(rows: SweepRow[], opts: SweepFigureOptions = {}): string {
  const usable = rows.filter((r) => Number.isFinite(r.nMin) && r.nMin >= 0);
  if (usable.length === 0) {
    throw new Error("no finite n_min entries to plot");
  }
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const margin = { left: 70, right: 170, top: 30, bottom: 50 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;

  const groups = new Map<string, SweepRow[]>();
  for (const row of usable) {
    const key = `${row.method}/${row.terminal}`;
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(row);
  }

  const params = usable.map((r) => r.param);
  const nmins = usable.map((r) => Math.max(r.nMin, 1e-2));
  const logX =
    opts.logX ?? (Math.min(...params) > 0 && Math.max(...params) / Math.min(...params) > 50);
  const xScale = (logX ? logScale : linearScale)(
    [Math.min(...params), Math.max(...params)],
    [margin.left, margin.left + plotW],
  );
  const yScale = logScale(
    [Math.max(Math.min(...nmins), 1e-2), Math.max(...nmins, 1)],
    [margin.top + plotH, margin.top],
  );

  const series: Series[] = [...groups.entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([key, rws]) => ({
      key,
      color: METHOD_COLOR[rws[0].method] ?? "#000",
      dash: TERMINAL_DASH[rws[0].terminal] ?? "",
      points: rws
        .slice()
        .sort((a, b) => a.param - b.param)
        .map((r) => [xScale(r.param), yScale(Math.max(r.nMin, 1e-2))] as [number, number]),
    }));

  const svg = new SvgCanvas(width, height);
  drawAxes(svg, {
    x: xScale,
    y: yScale,
    left: margin.left,
    top: margin.top,
    plotWidth: plotW,
    plotHeight: plotH,
    xLabel: "swept parameter",
    yLabel: "sufficient horizon",
  });
  if (opts.title) svg.text(margin.left + plotW / 2, 18, opts.title, 13, "middle");
  for (const s of series) {
    svg.polyline(s.points, s.color, 1.6, s.dash);
    for (const [x, y] of s.points) svg.circle(x, y, 2.2, s.color);
  }
  // legend
  let ly = margin.top + 8;
  const lx = margin.left + plotW + 14;
  for (const s of series) {
    svg.line(lx, ly - 4, lx + 26, ly - 4, s.color, 1.6, s.dash);
    svg.text(lx + 32, ly, s.key, 10);
    ly += 16;
  }
  return svg.render();
}
