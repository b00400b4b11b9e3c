import { mkdtempSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseSweepCsv, parseTraceCsv } from "../src/csv.js";
import { renderHorizonSweep } from "../src/horizonSweep.js";
import { renderTrajectory } from "../src/trajectory.js";
import { linearScale, logScale } from "../src/svg.js";
import { main } from "../src/cli.js";

const SWEEP_CSV = [
  "param,method,terminal,alpha,n_min,provenance",
  "0.0001,tight_storage,none,nan,95406.3399,exact",
  "0.0001,tight_stage,none,nan,9909.6229,exact",
  "1.7,tight_storage,none,0.402644305,47.6138,exact",
  "1.7,tight_stage,none,nan,9909.6229,exact",
  "13,tight_storage,none,0.748966729,5.0573,exact",
  "13,tight_stage,none,nan,9909.6229,exact",
  "30,tight_storage,none,0.844789025,0.0000,exact",
  "30,tight_stage,none,nan,9909.6229,exact",
].join("\n");

const TRACE_CSV = [
  "k,x_1,x_2,u_1,stage_cost,V_N,lyap_residual",
  "0,1.0,0.5,-1,2.25,10.1,nan",
  "1,0.5,0.2,-0.5,0.54,5.3,-0.2",
  "2,0.2,0.1,-0.2,0.09,2.2,-0.1",
  "3,0.05,0.02,-0.04,0.005,0.4,-0.05",
].join("\n");

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "rhcert-plots-"));
  const p = join(dir, name);
  writeFileSync(p, content);
  return p;
}

describe("csv parsing", () => {
  it("parses the sweep schema", () => {
    const rows = parseSweepCsv(tmpFile("s.csv", SWEEP_CSV));
    expect(rows).toHaveLength(8);
    expect(rows[0].method).toBe("tight_storage");
    expect(rows[0].nMin).toBeCloseTo(95406.3399);
    expect(Number.isNaN(rows[0].alpha)).toBe(true);
  });

  it("parses the trace schema", () => {
    const t = parseTraceCsv(tmpFile("t.csv", TRACE_CSV));
    expect(t.k).toEqual([0, 1, 2, 3]);
    expect(t.stateNames).toEqual(["x_1", "x_2"]);
    expect(t.inputs[1][0]).toBeCloseTo(-0.5);
  });

  it("rejects an empty file", () => {
    expect(() => parseSweepCsv(tmpFile("e.csv", ""))).toThrow(/empty CSV/);
  });

  it("rejects a header-only sweep file", () => {
    expect(() =>
      parseSweepCsv(tmpFile("h.csv", "param,method,terminal,alpha,n_min,provenance")),
    ).toThrow(/no data rows/);
  });

  it("rejects a missing column", () => {
    expect(() => parseSweepCsv(tmpFile("m.csv", "param,method\n1,thm3"))).toThrow(/missing column/);
  });
});

describe("scales", () => {
  it("maps linearly", () => {
    const s = linearScale([0, 10], [0, 100]);
    expect(s(5)).toBeCloseTo(50);
    expect(s.ticks()).toContain(0);
  });

  it("maps decades", () => {
    const s = logScale([1, 1000], [0, 300]);
    expect(s(10)).toBeCloseTo(100);
    expect(s.ticks()).toEqual([1, 10, 100, 1000]);
  });
});

describe("figures", () => {
  it("renders a horizon sweep with one series per method/terminal pair", () => {
    const svg = renderHorizonSweep(parseSweepCsv(tmpFile("s.csv", SWEEP_CSV)));
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("tight_storage/none");
    expect(svg).toContain("tight_stage/none");
    const polylines = svg.match(/<polyline/g) ?? [];
    expect(polylines.length).toBeGreaterThanOrEqual(2);
  });

  it("renders single-row data as a marker", () => {
    const one = [
      "param,method,terminal,alpha,n_min,provenance",
      "13,tight_storage,none,0.7,5.0,exact",
    ].join("\n");
    const svg = renderHorizonSweep(parseSweepCsv(tmpFile("one.csv", one)));
    expect(svg).toContain("<circle");
  });

  it("renders a trajectory with setpoint reference lines", () => {
    const svg = renderTrajectory(parseTraceCsv(tmpFile("t.csv", TRACE_CSV)), {
      setpoint: [0, 0],
      title: "closed loop",
    });
    expect(svg).toContain("stroke-dasharray");
    expect(svg).toContain("closed loop");
  });

  it("draws flat lines for a constant trace", () => {
    const flat = [
      "k,x_1,u_1,stage_cost,V_N,lyap_residual",
      "0,1.0,0,0,0,nan",
      "1,1.0,0,0,0,nan",
    ].join("\n");
    const svg = renderTrajectory(parseTraceCsv(tmpFile("f.csv", flat)));
    expect(svg).toContain("<polyline");
  });
});

describe("cli", () => {
  it("writes non-empty output and is idempotent", () => {
    const csv = tmpFile("s.csv", SWEEP_CSV);
    const dir = mkdtempSync(join(tmpdir(), "rhcert-out-"));
    const out = join(dir, "fig.svg");
    expect(main(["--csv", csv, "--kind", "horizon_sweep", "--out", out])).toBe(0);
    const first = readFileSync(out, "utf8");
    expect(statSync(out).size).toBeGreaterThan(0);
    expect(main(["--csv", csv, "--kind", "horizon_sweep", "--out", out])).toBe(0);
    expect(readFileSync(out, "utf8")).toBe(first);
  });

  it("fails cleanly on an empty csv", () => {
    const csv = tmpFile("e.csv", "");
    const dir = mkdtempSync(join(tmpdir(), "rhcert-out-"));
    expect(main(["--csv", csv, "--kind", "horizon_sweep", "--out", join(dir, "x.svg")])).toBe(1);
  });

  it("rejects unknown kinds and missing flags", () => {
    expect(main(["--kind", "nope"])).toBe(2);
    const csv = tmpFile("s.csv", SWEEP_CSV);
    const dir = mkdtempSync(join(tmpdir(), "rhcert-out-"));
    expect(main(["--csv", csv, "--kind", "nope", "--out", join(dir, "x.svg")])).toBe(1);
  });
});
