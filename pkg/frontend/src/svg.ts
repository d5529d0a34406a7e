/** Minimal hand-rolled SVG plotting: scales, axes, lines, bands, heatmaps. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 36, right: 24, bottom: 52, left: 72 };

export class LinearScale {
  constructor(
    public d0: number,
    public d1: number,
    public r0: number,
    public r1: number,
  ) {}

  map(x: number): number {
    if (this.d1 === this.d0) return 0.5 * (this.r0 + this.r1);
    return this.r0 + ((x - this.d0) / (this.d1 - this.d0)) * (this.r1 - this.r0);
  }

  ticks(n = 6): number[] {
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const raw = span / n;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * Math.abs(step); v += step) {
      out.push(Math.abs(v) < 1e-12 * Math.abs(step) ? 0 : v);
    }
    return out;
  }
}

export function extent(values: number[], padFrac = 0.0): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export class Svg {
  private parts: string[] = [];

  constructor(
    public width: number,
    public height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.8, dash = ""): void {
    const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polygon(points: Array<[number, number]>, fill: string, opacity = 0.25): void {
    const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.add(`<polygon points="${pts}" fill="${fill}" fill-opacity="${opacity}" stroke="none"/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.add(`<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.add(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; rotate?: number; fill?: string } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#222";
    const rot = opts.rotate ? ` transform="rotate(${opts.rotate} ${x} ${y})"` : "";
    this.add(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="Helvetica, Arial, sans-serif"${rot}>${esc(s)}</text>`,
    );
  }

  axes(xs: LinearScale, ys: LinearScale, m: Margin, xLabel: string, yLabel: string): void {
    const x0 = m.left;
    const x1 = this.width - m.right;
    const y0 = this.height - m.bottom;
    const y1 = m.top;
    this.line(x0, y0, x1, y0, "#222", 1.2);
    this.line(x0, y0, x0, y1, "#222", 1.2);
    for (const t of xs.ticks()) {
      const px = xs.map(t);
      this.line(px, y0, px, y0 + 5, "#222");
      this.line(px, y0, px, y1, "#ddd", 0.6);
      this.text(px, y0 + 18, fmt(t), { anchor: "middle", size: 11 });
    }
    for (const t of ys.ticks()) {
      const py = ys.map(t);
      this.line(x0 - 5, py, x0, py, "#222");
      this.line(x0, py, x1, py, "#ddd", 0.6);
      this.text(x0 - 8, py + 4, fmt(t), { anchor: "end", size: 11 });
    }
    this.text((x0 + x1) / 2, this.height - 14, xLabel, { anchor: "middle" });
    this.text(18, (y0 + y1) / 2, yLabel, { anchor: "middle", rotate: -90 });
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>` +
      this.parts.join("") +
      `</svg>`
    );
  }
}

/** Blue-to-yellow perceptual-ish ramp for heatmaps. */
export function colormap(t: number): string {
  const u = Math.min(1, Math.max(0, t));
  const stops: Array<[number, number, number]> = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const x = u * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(x));
  const f = x - i;
  const c = stops[i].map((a, j) => Math.round(a + f * (stops[i + 1][j] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
