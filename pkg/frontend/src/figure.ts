/**
 * Hand-rolled SVG figure builder.
 *
 * One figure holds two panels side by side (dual objective on the left,
 * consensus distance on the right) over a shared virtual-time axis and a
 * shared legend.  No chart library: the output must be byte-stable across
 * reruns, and a few polylines with fixed-precision coordinates are easier
 * to keep deterministic than someone else's renderer.
 */

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

export interface Curve {
  label: string;
  color: string;
  /** Points already sorted by x (virtual time). */
  points: Array<[number, number]>;
}

export interface PanelSpec {
  title: string;
  yLabel: string;
  /** Plot log10 of the values; caller guarantees positivity. */
  logScale: boolean;
  curves: Curve[];
}

export interface FigureSpec {
  title: string;
  xLabel: string;
  panels: [PanelSpec, PanelSpec];
}

// Panel geometry, fixed for every figure.
const PANEL_W = 440;
const PANEL_H = 300;
const ML = 64; // room for y tick labels
const MR = 16;
const MT = 30;
const MB = 44;
const FIG_W = 2 * PANEL_W + 40;
const LEGEND_H = 34;
const TITLE_H = 30;
const FIG_H = TITLE_H + LEGEND_H + PANEL_H;

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Round tick positions covering [min, max] at 1/2/5 times a power of ten. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  if (!(max > min)) {
    return [min];
  }
  const span = max - min;
  const rawStep = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    if (mult * mag >= rawStep) {
      step = mult * mag;
      break;
    }
  }
  const ticks: number[] = [];
  const first = Math.ceil(min / step) * step;
  for (let v = first; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return parseFloat(v.toPrecision(4)).toString();
}

function fmtLogTick(exp: number): string {
  if (Number.isInteger(exp)) {
    if (exp === 0) return "1";
    return `1e${exp}`;
  }
  return fmtTick(Math.pow(10, exp));
}

// ---------------------------------------------------------------------------
// Panel rendering
// ---------------------------------------------------------------------------

function renderPanel(panel: PanelSpec, xLabel: string, ox: number, oy: number, clipId: string): string {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const curve of panel.curves) {
    for (const [x, y] of curve.points) {
      xs.push(x);
      ys.push(panel.logScale ? Math.log10(y) : y);
    }
  }
  let xMin = Math.min(...xs);
  let xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (xMax === xMin) {
    xMax = xMin + 1;
  }
  if (yMax === yMin) {
    // flat curve: pad so it sits mid-panel instead of on the frame
    yMin -= 0.5;
    yMax += 0.5;
  } else {
    const pad = 0.06 * (yMax - yMin);
    yMin -= pad;
    yMax += pad;
  }

  const iw = PANEL_W - ML - MR;
  const ih = PANEL_H - MT - MB;
  const xOf = (x: number) => ox + ML + ((x - xMin) / (xMax - xMin)) * iw;
  const yOf = (y: number) => oy + MT + ih - ((y - yMin) / (yMax - yMin)) * ih;

  const parts: string[] = [];

  // grid and ticks
  const xTicks = niceTicks(xMin, xMax, 5);
  const yTicks = niceTicks(yMin, yMax, 5);
  for (const t of xTicks) {
    const px = xOf(t).toFixed(2);
    parts.push(
      `<line x1="${px}" y1="${oy + MT}" x2="${px}" y2="${oy + MT + ih}" stroke="#e5e7eb" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${px}" y="${oy + MT + ih + 18}" font-size="11" fill="#555" text-anchor="middle">${esc(fmtTick(t))}</text>`,
    );
  }
  for (const t of yTicks) {
    const py = yOf(t).toFixed(2);
    parts.push(
      `<line x1="${ox + ML}" y1="${py}" x2="${ox + ML + iw}" y2="${py}" stroke="#e5e7eb" stroke-width="1"/>`,
    );
    const label = panel.logScale ? fmtLogTick(t) : fmtTick(t);
    parts.push(
      `<text x="${ox + ML - 6}" y="${py}" font-size="11" fill="#555" text-anchor="end" dominant-baseline="middle">${esc(label)}</text>`,
    );
  }

  // curves, clipped to the plot area
  for (const curve of panel.curves) {
    const pts = curve.points
      .map(([x, y]) => `${xOf(x).toFixed(2)},${yOf(panel.logScale ? Math.log10(y) : y).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${curve.color}" stroke-width="1.8" clip-path="url(#${clipId})"/>`,
    );
  }

  // frame on top of grid and curves
  parts.push(
    `<rect x="${ox + ML}" y="${oy + MT}" width="${iw}" height="${ih}" fill="none" stroke="#333" stroke-width="1"/>`,
  );

  // axis titles
  const yTitle = panel.logScale ? `${panel.yLabel} (log)` : panel.yLabel;
  parts.push(
    `<text x="${ox + ML + iw / 2}" y="${oy + MT + ih + 36}" font-size="12" fill="#222" text-anchor="middle">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="${ox + 14}" y="${oy + MT + ih / 2}" font-size="12" fill="#222" text-anchor="middle" transform="rotate(-90 ${ox + 14} ${oy + MT + ih / 2})">${esc(yTitle)}</text>`,
  );
  parts.push(
    `<text x="${ox + ML + iw / 2}" y="${oy + MT - 8}" font-size="13" fill="#111" text-anchor="middle" font-weight="bold">${esc(panel.title)}</text>`,
  );

  const clip = `<clipPath id="${clipId}"><rect x="${ox + ML}" y="${oy + MT}" width="${iw}" height="${ih}"/></clipPath>`;
  return clip + parts.join("\n");
}

// ---------------------------------------------------------------------------
// Figure assembly
// ---------------------------------------------------------------------------

export function buildFigure(spec: FigureSpec): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${FIG_W}" height="${FIG_H}" viewBox="0 0 ${FIG_W} ${FIG_H}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${FIG_W}" height="${FIG_H}" fill="white"/>`);
  parts.push(
    `<text x="${FIG_W / 2}" y="21" font-size="15" fill="#111" text-anchor="middle" font-weight="bold">${esc(spec.title)}</text>`,
  );

  // one legend row for both panels; curve sets are identical by construction
  const legendCurves = spec.panels[0].curves;
  const itemW = 150;
  let lx = FIG_W / 2 - (legendCurves.length * itemW) / 2;
  const ly = TITLE_H + 14;
  for (const curve of legendCurves) {
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${curve.color}" stroke-width="2.5"/>`,
    );
    parts.push(
      `<text x="${lx + 32}" y="${ly}" font-size="12" fill="#222" dominant-baseline="middle">${esc(curve.label)}</text>`,
    );
    lx += itemW;
  }

  const panelY = TITLE_H + LEGEND_H;
  parts.push(renderPanel(spec.panels[0], spec.xLabel, 0, panelY, "clip-left"));
  parts.push(renderPanel(spec.panels[1], spec.xLabel, PANEL_W + 40, panelY, "clip-right"));
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
