/** Closed-loop trajectory figure: state and input panels over time. */

import { TraceData } from "./csv.js";
import { drawAxes, linearScale, SvgCanvas } from "./svg.js";

const PALETTE = ["#1f5fbf", "#c02020", "#168a4a", "#b8860b", "#7040a0", "#008b8b", "#888888", "#d2527f"];

export interface TrajectoryOptions {
  width?: number;
  height?: number;
  title?: string;
  /** reference levels drawn as dashed horizontal lines on the state panel */
  setpoint?: number[];
  /** subset of state columns to draw (1-based indices); default all */
  stateIndices?: number[];
}

export function renderTrajectory(trace: TraceData, opts: TrajectoryOptions = {}): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 520;
  const margin = { left: 64, right: 120, top: 28, bottom: 44 };
  const gap = 48;
  const plotW = width - margin.left - margin.right;
  const panelH = (height - margin.top - margin.bottom - gap) / 2;

  const wanted = opts.stateIndices ?? trace.stateNames.map((_, i) => i + 1);
  const cols = wanted.map((i) => i - 1).filter((i) => i >= 0 && i < trace.stateNames.length);
  if (cols.length === 0) {
    throw new Error("no state columns selected");
  }

  const svg = new SvgCanvas(width, height);
  const kMax = Math.max(...trace.k, 1);
  const xScale = linearScale([0, kMax], [margin.left, margin.left + plotW]);

  const stateVals = trace.states.flatMap((row) => cols.map((c) => row[c]));
  const ref = opts.setpoint ?? [];
  const yLo = Math.min(...stateVals, ...ref);
  const yHi = Math.max(...stateVals, ...ref);
  const pad = 0.05 * (yHi - yLo || 1);
  const yState = linearScale([yLo - pad, yHi + pad], [margin.top + panelH, margin.top]);
  drawAxes(svg, {
    x: xScale,
    y: yState,
    left: margin.left,
    top: margin.top,
    plotWidth: plotW,
    plotHeight: panelH,
    xLabel: "",
    yLabel: "states",
  });
  if (opts.title) svg.text(margin.left + plotW / 2, 16, opts.title, 13, "middle");
  cols.forEach((c, j) => {
    const color = PALETTE[j % PALETTE.length];
    svg.polyline(
      trace.k.map((k, row) => [xScale(k), yState(trace.states[row][c])] as [number, number]),
      color,
      1.4,
    );
    svg.text(margin.left + plotW + 10, margin.top + 10 + 14 * j, trace.stateNames[c], 10);
    svg.line(margin.left + plotW + 10, margin.top + 16 + 14 * j, margin.left + plotW + 30, margin.top + 16 + 14 * j, color, 1.4);
  });
  for (const level of ref) {
    svg.line(xScale(0), yState(level), xScale(kMax), yState(level), "#000", 0.8, "5,4");
  }

  const inputVals = trace.inputs.flat();
  const iLo = Math.min(...inputVals, 0);
  const iHi = Math.max(...inputVals, 0);
  const ipad = 0.05 * (iHi - iLo || 1);
  const top2 = margin.top + panelH + gap;
  const yInput = linearScale([iLo - ipad, iHi + ipad], [top2 + panelH, top2]);
  drawAxes(svg, {
    x: xScale,
    y: yInput,
    left: margin.left,
    top: top2,
    plotWidth: plotW,
    plotHeight: panelH,
    xLabel: "step k",
    yLabel: "inputs",
  });
  trace.inputNames.forEach((name, c) => {
    const color = PALETTE[c % PALETTE.length];
    svg.polyline(
      trace.k.map((k, row) => [xScale(k), yInput(trace.inputs[row][c])] as [number, number]),
      color,
      1.4,
    );
    svg.text(margin.left + plotW + 10, top2 + 10 + 14 * c, name, 10);
    svg.line(margin.left + plotW + 10, top2 + 16 + 14 * c, margin.left + plotW + 30, top2 + 16 + 14 * c, color, 1.4);
  });
  return svg.render();
}
