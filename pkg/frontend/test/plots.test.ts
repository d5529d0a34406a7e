import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { FormatError, column, parseDataText, requireCommand } from "../src/format.js";
import { render } from "../src/plots.js";

const META = (command: string) =>
  JSON.stringify({
    format: "cavrotor/v1",
    version: "0.1.0",
    command,
    metadata: { config_sha256: "abc123def4567890", seed: 20260811 },
    extra: { kind: command === "ensemble" ? "rod" : undefined, status: "captured" },
  });

const ENSEMBLE_ROD = [
  META("ensemble"),
  "v_x_m_s,p_capture,ci_low,ci_high,n_captured,n_transmitted,n_undecided,n_total",
  "0.1,0.86,0.80,0.91,430,70,0,500",
  "0.5,0.55,0.49,0.61,275,225,0,500",
  "1.0,0.05,0.03,0.08,25,475,0,500",
  "2.0,0.0,0.0,0.01,0,500,0,500",
].join("\n");

const ENSEMBLE_SPHERE = ENSEMBLE_ROD.replace('"kind":"rod"', '"kind":"sphere"')
  .replace("0.86", "0.02")
  .replace("0.55", "0.0")
  .replace("0.05,0.03,0.08,25,475", "0.0,0.0,0.01,0,500");

const TRAJECTORY = [
  META("trajectory"),
  "t_s,x_m,y_m,z_m,px_kg_m_s,py_kg_m_s,pz_kg_m_s,mx,my,mz,Lx_kg_m2_s,Ly_kg_m2_s,Lz_kg_m2_s,re_b,im_b,E_J,gamma_sc_1_s",
  "0.0,-3e-5,0,0,1e-18,0,0,1,0,0,0,0,0,1e5,0,4.4e-18,0",
  "1e-4,-1e-5,0,0,1e-18,0,0,1,0,0,0,0,0,1e5,0,2.0e-18,1e4",
  "2e-4,0,0,0,5e-19,0,0,1,0,0,0,0,0,1e5,0,-3.0e-18,5e4",
  "3e-4,1e-6,0,0,1e-19,0,0,1,0,0,0,0,0,1e5,0,-1.2e-17,8e4",
].join("\n");

const POTENTIAL = [
  META("potential-map"),
  "z_m,beta_rad,v,V_J",
  "-1e-7,0.0,0.4,-1e-18",
  "-1e-7,1.57,0.9,-3e-18",
  "1e-7,0.0,0.45,-1.2e-18",
  "1e-7,1.57,0.95,-3.2e-18",
].join("\n");

describe("format parsing", () => {
  it("parses header, columns and rows", () => {
    const f = parseDataText(ENSEMBLE_ROD, "rod.csv");
    expect(f.meta.command).toBe("ensemble");
    expect(f.columns[0]).toBe("v_x_m_s");
    expect(f.rows).toHaveLength(4);
    expect(column(f, "p_capture")[0]).toBeCloseTo(0.86);
  });

  it("rejects files without a JSON header", () => {
    expect(() => parseDataText("v_x,p\n0.1,0.5\n")).toThrow(FormatError);
  });

  it("rejects unknown formats", () => {
    const bad = ENSEMBLE_ROD.replace("cavrotor/v1", "cavrotor/v999");
    expect(() => parseDataText(bad)).toThrow(/unsupported format/);
  });

  it("rejects empty CSV bodies", () => {
    const empty = ENSEMBLE_ROD.split("\n").slice(0, 2).join("\n");
    expect(() => parseDataText(empty)).toThrow(/no data rows/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseDataText(ENSEMBLE_ROD + "\n0.3,0.2")).toThrow(/fields/);
  });

  it("names missing columns", () => {
    const f = parseDataText(ENSEMBLE_ROD);
    expect(() => column(f, "nope")).toThrow(/missing column "nope"/);
  });

  it("enforces command/kind matching", () => {
    const f = parseDataText(TRAJECTORY);
    expect(() => requireCommand(f, "ensemble")).toThrow(/metadata mismatch/);
  });
});

describe("figures", () => {
  it("renders a rod-vs-sphere capture overlay", () => {
    const rod = parseDataText(ENSEMBLE_ROD, "rod.csv");
    const sphere = parseDataText(ENSEMBLE_SPHERE, "sphere.csv");
    const svg = render({ kind: "capture_curve", inputs: [rod, sphere], labels: ["rod", "sphere"] });
    expect(svg).toContain("<svg");
    expect(svg).toContain("rod");
    expect(svg).toContain("sphere");
    expect(svg).toContain("capture probability");
    // two polylines plus confidence bands
    expect(svg.match(/<polyline/g)!.length).toBeGreaterThanOrEqual(2);
    expect(svg.match(/<polygon/g)!.length).toBeGreaterThanOrEqual(2);
    // metadata echoed into the caption
    expect(svg).toContain("abc123def456");
  });

  it("renders an energy trace with a capture marker at the zero crossing", () => {
    const traj = parseDataText(TRAJECTORY, "traj.csv");
    const svg = render({ kind: "energy_trace", inputs: [traj] });
    expect(svg).toContain("E = 0");
    expect(svg).toContain("captured");
  });

  it("fails cleanly on mismatched metadata", () => {
    const traj = parseDataText(TRAJECTORY, "traj.csv");
    expect(() => render({ kind: "capture_curve", inputs: [traj] })).toThrow(
      /metadata mismatch/,
    );
    const rod = parseDataText(ENSEMBLE_ROD, "rod.csv");
    expect(() => render({ kind: "energy_trace", inputs: [rod] })).toThrow(
      /metadata mismatch/,
    );
  });

  it("renders a potential heatmap", () => {
    const pot = parseDataText(POTENTIAL, "pot.csv");
    const svg = render({ kind: "potential_map", inputs: [pot] });
    expect(svg).toContain("optical potential");
    expect(svg.match(/<rect/g)!.length).toBeGreaterThanOrEqual(5);
  });

  it("rejects missing columns in declared-kind files", () => {
    const broken = [
      META("ensemble"),
      "v_x_m_s,p_capture",
      "0.1,0.5",
    ].join("\n");
    const f = parseDataText(broken);
    expect(() => render({ kind: "capture_curve", inputs: [f] })).toThrow(
      /missing column/,
    );
  });
});

describe("criterion 8: CLI on simulator output files", () => {
  const dir = mkdtempSync(join(tmpdir(), "cavrotor-plots-"));
  const rodCsv = join(dir, "rod.csv");
  const sphereCsv = join(dir, "sphere.csv");
  const trajCsv = join(dir, "traj.csv");
  writeFileSync(rodCsv, ENSEMBLE_ROD);
  writeFileSync(sphereCsv, ENSEMBLE_SPHERE);
  writeFileSync(trajCsv, TRAJECTORY);

  it("writes a capture overlay and an energy trace", () => {
    const overlay = join(dir, "capture.svg");
    const trace = join(dir, "energy.svg");
    expect(
      main(["capture-curve", "--rod", rodCsv, "--sphere", sphereCsv, "--out", overlay]),
    ).toBe(0);
    expect(main(["energy-trace", "--input", trajCsv, "--out", trace])).toBe(0);
    expect(readFileSync(overlay, "utf-8")).toContain("</svg>");
    expect(readFileSync(trace, "utf-8")).toContain("captured");
  });

  it("exits nonzero on mismatched metadata without writing", () => {
    const out = join(dir, "bad.svg");
    expect(main(["energy-trace", "--input", rodCsv, "--out", out])).toBe(1);
  });

  it("exits nonzero on an empty CSV", () => {
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, META("ensemble") + "\nv_x_m_s,p_capture\n");
    expect(main(["capture-curve", "--input", empty, "--out", join(dir, "e.svg")])).toBe(1);
  });
});
