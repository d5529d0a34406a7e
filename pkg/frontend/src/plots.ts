/**
 * Figure builders. Each consumes parsed data files, checks that their
 * metadata matches the figure kind, and returns an SVG string. No physics
 * is recomputed here.
 */

import { DataFile, FormatError, column, requireCommand } from "./format.js";
import { DEFAULT_MARGIN, LinearScale, Svg, colormap, extent } from "./svg.js";

export type FigureKind =
  | "capture_curve"
  | "energy_trace"
  | "potential_map"
  | "intensity_map"
  | "cooling_sweep";

export interface FigureSpec {
  kind: FigureKind;
  inputs: DataFile[];
  labels?: string[];
  width?: number;
  height?: number;
}

const W = 720;
const H = 480;

function scales(
  svg: Svg,
  xd: [number, number],
  yd: [number, number],
): [LinearScale, LinearScale] {
  const m = DEFAULT_MARGIN;
  return [
    new LinearScale(xd[0], xd[1], m.left, svg.width - m.right),
    new LinearScale(yd[0], yd[1], svg.height - m.bottom, m.top),
  ];
}

function caption(svg: Svg, file: DataFile): void {
  const meta = file.meta.metadata as { config_sha256?: string; seed?: number };
  const hash = (meta.config_sha256 ?? "").slice(0, 12);
  svg.text(svg.width - 8, 14, `cavrotor ${file.meta.version}  config ${hash}  seed ${meta.seed}`, {
    anchor: "end",
    size: 10,
    fill: "#888",
  });
}

/** Capture overlay: rod and sphere probabilities with Wilson bands. */
export function captureCurveFigure(spec: FigureSpec): string {
  if (spec.inputs.length < 1) {
    throw new FormatError("capture_curve needs at least one ensemble file");
  }
  spec.inputs.forEach((f) => requireCommand(f, "ensemble"));
  const svg = new Svg(spec.width ?? W, spec.height ?? H);
  const allV = spec.inputs.flatMap((f) => column(f, "v_x_m_s"));
  const [xs, ys] = scales(svg, extent(allV, 0.04), [0, 1.05]);
  svg.axes(xs, ys, DEFAULT_MARGIN, "forward velocity v_x (m/s)", "capture probability");

  const colors = ["#1f5fbf", "#c23b22", "#2e8b57", "#8a2be2"];
  spec.inputs.forEach((file, i) => {
    const v = column(file, "v_x_m_s");
    const p = column(file, "p_capture");
    const lo = column(file, "ci_low");
    const hi = column(file, "ci_high");
    const color = colors[i % colors.length];
    const band: Array<[number, number]> = [
      ...v.map((x, j) => [xs.map(x), ys.map(hi[j])] as [number, number]),
      ...v
        .map((x, j) => [xs.map(x), ys.map(lo[j])] as [number, number])
        .reverse(),
    ];
    svg.polygon(band, color, 0.18);
    svg.polyline(
      v.map((x, j) => [xs.map(x), ys.map(p[j])] as [number, number]),
      color,
      2.0,
      i === 0 ? "" : "6 3",
    );
    v.forEach((x, j) => svg.circle(xs.map(x), ys.map(p[j]), 2.6, color));
    const label =
      spec.labels?.[i] ?? String((file.meta.extra as { kind?: string })?.kind ?? `set ${i + 1}`);
    svg.text(svg.width - DEFAULT_MARGIN.right - 8, DEFAULT_MARGIN.top + 18 + 16 * i, label, {
      anchor: "end",
      fill: color,
    });
  });
  caption(svg, spec.inputs[0]);
  return svg.render();
}

/** Total energy along trajectories with the E = 0 binding line. */
export function energyTraceFigure(spec: FigureSpec): string {
  if (spec.inputs.length < 1) {
    throw new FormatError("energy_trace needs at least one trajectory file");
  }
  spec.inputs.forEach((f) => requireCommand(f, "trajectory"));
  const svg = new Svg(spec.width ?? W, spec.height ?? H);
  const allT = spec.inputs.flatMap((f) => column(f, "t_s").map((t) => t * 1e3));
  const allE = spec.inputs.flatMap((f) => column(f, "E_J"));
  const [xs, ys] = scales(svg, extent(allT), extent(allE, 0.06));
  svg.axes(xs, ys, DEFAULT_MARGIN, "time (ms)", "total energy (J)");
  // capture threshold: bound states live below zero
  svg.line(xs.map(xs.d0), ys.map(0), xs.map(xs.d1), ys.map(0), "#444", 1.2, "4 3");
  svg.text(xs.map(xs.d1), ys.map(0) - 6, "E = 0", { anchor: "end", size: 11, fill: "#444" });

  const colors = ["#1f5fbf", "#c23b22", "#2e8b57"];
  spec.inputs.forEach((file, i) => {
    const t = column(file, "t_s").map((x) => x * 1e3);
    const e = column(file, "E_J");
    const color = colors[i % colors.length];
    svg.polyline(
      t.map((x, j) => [xs.map(x), ys.map(e[j])] as [number, number]),
      color,
      1.8,
      i === 0 ? "" : "6 3",
    );
    // mark the first zero crossing (capture instant)
    for (let j = 1; j < e.length; j++) {
      if (e[j - 1] >= 0 && e[j] < 0) {
        const f = e[j - 1] / (e[j - 1] - e[j]);
        const tc = t[j - 1] + f * (t[j] - t[j - 1]);
        svg.circle(xs.map(tc), ys.map(0), 4.5, color);
        svg.text(xs.map(tc) + 6, ys.map(0) - 8, "captured", { size: 11, fill: color });
        break;
      }
    }
    const status = (file.meta.extra as { status?: string })?.status ?? "";
    const label = `${spec.labels?.[i] ?? `trajectory ${i + 1}`}${status ? ` (${status})` : ""}`;
    svg.text(DEFAULT_MARGIN.left + 10, DEFAULT_MARGIN.top + 18 + 16 * i, label, { fill: color });
  });
  caption(svg, spec.inputs[0]);
  return svg.render();
}

function heatmap(
  spec: FigureSpec,
  command: string,
  xName: string,
  yName: string,
  vName: string,
  xLabel: string,
  yLabel: string,
  title: string,
): string {
  if (spec.inputs.length !== 1) {
    throw new FormatError(`${spec.kind} needs exactly one input file`);
  }
  const file = spec.inputs[0];
  requireCommand(file, command);
  const xsv = column(file, xName);
  const ysv = column(file, yName);
  const vals = column(file, vName);
  const xu = [...new Set(xsv)].sort((a, b) => a - b);
  const yu = [...new Set(ysv)].sort((a, b) => a - b);
  const svg = new Svg(spec.width ?? W, spec.height ?? H);
  const [xs, ys] = scales(svg, extent(xu), extent(yu));
  const [vlo, vhi] = extent(vals);
  const cw = Math.abs(xs.map(xu[1] ?? xu[0] + 1) - xs.map(xu[0])) + 0.5;
  const ch = Math.abs(ys.map(yu[1] ?? yu[0] + 1) - ys.map(yu[0])) + 0.5;
  for (let i = 0; i < vals.length; i++) {
    const t = vhi > vlo ? (vals[i] - vlo) / (vhi - vlo) : 0.5;
    svg.rect(xs.map(xsv[i]) - cw / 2, ys.map(ysv[i]) - ch / 2, cw, ch, colormap(t));
  }
  svg.axes(xs, ys, DEFAULT_MARGIN, xLabel, yLabel);
  svg.text(DEFAULT_MARGIN.left, 18, `${title}  [${vlo.toExponential(2)}, ${vhi.toExponential(2)}]`, {
    size: 12,
  });
  caption(svg, file);
  return svg.render();
}

export function potentialMapFigure(spec: FigureSpec): string {
  return heatmap(
    spec,
    "potential-map",
    "z_m",
    "beta_rad",
    "v",
    "z (m)",
    "beta (rad)",
    "dimensionless optical potential v(z, beta)",
  );
}

export function intensityMapFigure(spec: FigureSpec): string {
  return heatmap(
    spec,
    "intensity-map",
    "phi_rad",
    "theta_rad",
    "intensity_W_m2",
    "phi (rad)",
    "theta (rad)",
    "scattered intensity (W/m^2)",
  );
}

/** Cooling-limit sweep: temperatures vs detuning. */
export function coolingSweepFigure(spec: FigureSpec): string {
  if (spec.inputs.length !== 1) {
    throw new FormatError("cooling_sweep needs exactly one input file");
  }
  const file = spec.inputs[0];
  requireCommand(file, "cooling-limits");
  const x = column(file, "detuning_over_kappa");
  const series: Array<[string, string]> = [
    ["T_z_K", "#1f5fbf"],
    ["T_alpha_K", "#c23b22"],
    ["T_beta_K", "#2e8b57"],
  ];
  const svg = new Svg(spec.width ?? W, spec.height ?? H);
  const allT = series.flatMap(([name]) => column(file, name)).map((t) => t * 1e6);
  const [xs, ys] = scales(svg, extent(x, 0.03), extent(allT, 0.08));
  svg.axes(xs, ys, DEFAULT_MARGIN, "detuning / kappa", "recoil-limit temperature (uK)");
  series.forEach(([name, color], i) => {
    const t = column(file, name).map((v) => v * 1e6);
    svg.polyline(
      x.map((xx, j) => [xs.map(xx), ys.map(t[j])] as [number, number]),
      color,
      1.8,
      i === 0 ? "" : i === 1 ? "6 3" : "2 3",
    );
    svg.text(DEFAULT_MARGIN.left + 10, DEFAULT_MARGIN.top + 18 + 16 * i, name.replace("_K", ""), {
      fill: color,
    });
  });
  caption(svg, file);
  return svg.render();
}

export function render(spec: FigureSpec): string {
  switch (spec.kind) {
    case "capture_curve":
      return captureCurveFigure(spec);
    case "energy_trace":
      return energyTraceFigure(spec);
    case "potential_map":
      return potentialMapFigure(spec);
    case "intensity_map":
      return intensityMapFigure(spec);
    case "cooling_sweep":
      return coolingSweepFigure(spec);
    default:
      throw new FormatError(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
}
