/** Minimal deterministic SVG line-plot primitives (no DOM, no renderer). */

export interface Series {
    label: string;
    x: number[];
    y: number[];
}

export interface PanelSpec {
    title: string;
    xlabel: string;
    ylabel: string;
    series: Series[];
    yMin?: number;
    yMax?: number;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W = 560;
const H = 300;
const MARGIN = { left: 62, right: 14, top: 28, bottom: 40 };

function extent(values: number[]): [number, number] {
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of values) {
        if (Number.isFinite(v)) {
            lo = Math.min(lo, v);
            hi = Math.max(hi, v);
        }
    }
    if (!(hi > lo)) {
        hi = lo + 1;
    }
    return [lo, hi];
}

function ticks(lo: number, hi: number, n = 5): number[] {
    const span = hi - lo;
    const step = Math.pow(10, Math.floor(Math.log10(span / n)));
    const err = span / (n * step);
    const mult = err >= 7.5 ? 10 : err >= 3 ? 5 : err >= 1.5 ? 2 : 1;
    const s = mult * step;
    const out: number[] = [];
    for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) out.push(v);
    return out;
}

function fmt(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-2) return v.toExponential(1);
    return String(Math.round(v * 1e4) / 1e4);
}

export function renderPanel(spec: PanelSpec, xOff: number, yOff: number): string {
    const xs = spec.series.flatMap((s) => s.x);
    const ys = spec.series.flatMap((s) => s.y);
    const [x0, x1] = extent(xs);
    let [y0, y1] = extent(ys);
    if (spec.yMin !== undefined) y0 = Math.min(y0, spec.yMin);
    if (spec.yMax !== undefined) y1 = Math.max(y1, spec.yMax);
    const pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const px = (x: number) =>
        MARGIN.left + ((x - x0) / (x1 - x0)) * (W - MARGIN.left - MARGIN.right);
    const py = (y: number) =>
        H - MARGIN.bottom - ((y - y0) / (y1 - y0)) * (H - MARGIN.top - MARGIN.bottom);

    const parts: string[] = [`<g transform="translate(${xOff},${yOff})">`];
    parts.push(
        `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${W - MARGIN.left - MARGIN.right}" ` +
            `height="${H - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#333"/>`
    );
    for (const tx of ticks(x0, x1)) {
        const x = px(tx);
        parts.push(`<line x1="${x.toFixed(2)}" y1="${H - MARGIN.bottom}" x2="${x.toFixed(2)}" y2="${H - MARGIN.bottom + 4}" stroke="#333"/>`);
        parts.push(`<text x="${x.toFixed(2)}" y="${H - MARGIN.bottom + 16}" font-size="10" text-anchor="middle">${fmt(tx)}</text>`);
    }
    for (const ty of ticks(y0, y1)) {
        const y = py(ty);
        parts.push(`<line x1="${MARGIN.left - 4}" y1="${y.toFixed(2)}" x2="${MARGIN.left}" y2="${y.toFixed(2)}" stroke="#333"/>`);
        parts.push(`<text x="${MARGIN.left - 7}" y="${(y + 3).toFixed(2)}" font-size="10" text-anchor="end">${fmt(ty)}</text>`);
    }
    spec.series.forEach((s, i) => {
        const pts = s.x
            .map((x, k) => `${px(x).toFixed(2)},${py(s.y[k]).toFixed(2)}`)
            .join(" ");
        parts.push(`<polyline points="${pts}" fill="none" stroke="${COLORS[i % COLORS.length]}" stroke-width="1.4"/>`);
        parts.push(
            `<text x="${W - MARGIN.right - 6}" y="${MARGIN.top + 14 + 13 * i}" font-size="11" ` +
                `text-anchor="end" fill="${COLORS[i % COLORS.length]}">${escapeXml(s.label)}</text>`
        );
    });
    parts.push(`<text x="${(MARGIN.left + W - MARGIN.right) / 2}" y="${MARGIN.top - 10}" font-size="12" text-anchor="middle">${escapeXml(spec.title)}</text>`);
    parts.push(`<text x="${(MARGIN.left + W - MARGIN.right) / 2}" y="${H - 8}" font-size="11" text-anchor="middle">${escapeXml(spec.xlabel)}</text>`);
    parts.push(
        `<text x="14" y="${(MARGIN.top + H - MARGIN.bottom) / 2}" font-size="11" text-anchor="middle" ` +
            `transform="rotate(-90 14 ${(MARGIN.top + H - MARGIN.bottom) / 2})">${escapeXml(spec.ylabel)}</text>`
    );
    parts.push("</g>");
    return parts.join("\n");
}

export function renderFigure(panels: PanelSpec[]): string {
    const height = H * panels.length;
    const body = panels.map((p, i) => renderPanel(p, 0, i * H)).join("\n");
    return (
        `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${height}" ` +
        `viewBox="0 0 ${W} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
        `<rect width="${W}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
    );
}

function escapeXml(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PANEL_WIDTH = W;
export const PANEL_HEIGHT = H;
