/** Minimal deterministic SVG assembly: scales, axes, polylines, legends. */

export interface Scale {
  (v: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.ticks = () => {
    const step = niceStep(span / 5);
    const start = Math.ceil(d0 / step) * step;
    const out: number[] = [];
    for (let t = start; t <= d1 + 1e-12; t += step) out.push(roundTo(t, step));
    return out;
  };
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const d0 = Math.log10(Math.max(domain[0], 1e-300));
  const d1 = Math.log10(Math.max(domain[1], 1e-300));
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((Math.log10(Math.max(v, 1e-300)) - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.ticks = () => {
    const out: number[] = [];
    for (let e = Math.ceil(d0); e <= Math.floor(d1) + 1e-9; e += 1) out.push(10 ** e);
    return out;
  };
  return f;
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const norm = raw / mag;
  const nice = norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10;
  return nice * mag;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(v.toFixed(digits + 2));
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-2) {
    const e = Math.floor(Math.log10(a));
    const m = v / 10 ** e;
    return `${Number(m.toFixed(2))}e${e}`;
  }
  return `${Number(v.toPrecision(4))}`;
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    if (points.length === 0) return;
    const pts = points.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.add(`<circle cx="${r(x)}" cy="${r(y)}" r="${radius}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, size = 11, anchor = "start", rotate = 0): void {
    const tr = rotate ? ` transform="rotate(${rotate} ${r(x)} ${r(y)})"` : "";
    this.add(
      `<text x="${r(x)}" y="${r(y)}" font-size="${size}" font-family="sans-serif" text-anchor="${anchor}"${tr}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function r(v: number): string {
  return Number(v.toFixed(2)).toString();
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface AxesOptions {
  x: Scale;
  y: Scale;
  left: number;
  top: number;
  plotWidth: number;
  plotHeight: number;
  xLabel: string;
  yLabel: string;
  xLog?: boolean;
}

export function drawAxes(svg: SvgCanvas, o: AxesOptions): void {
  const bottom = o.top + o.plotHeight;
  const right = o.left + o.plotWidth;
  svg.line(o.left, bottom, right, bottom);
  svg.line(o.left, o.top, o.left, bottom);
  for (const t of o.x.ticks()) {
    const px = o.x(t);
    svg.line(px, bottom, px, bottom + 4);
    svg.text(px, bottom + 16, formatTick(t), 10, "middle");
  }
  for (const t of o.y.ticks()) {
    const py = o.y(t);
    svg.line(o.left - 4, py, o.left, py);
    svg.text(o.left - 7, py + 3, formatTick(t), 10, "end");
    svg.line(o.left, py, right, py, "#eee", 0.6);
  }
  svg.text(o.left + o.plotWidth / 2, bottom + 32, o.xLabel, 12, "middle");
  svg.text(o.left - 44, o.top + o.plotHeight / 2, o.yLabel, 12, "middle", -90);
}
