/** Readers for the solver's trajectory.csv / manifest.json contract. */

import fs from "fs";

export interface TrajectoryPoint {
    t: number;
    rho00: number;
    reRho01: number;
    imRho01: number;
    purity: number;
    maxRank: number;
    size: number;
}

export interface Trajectory {
    label: string;
    points: TrajectoryPoint[];
}

export function parseTrajectory(path: string, label?: string): Trajectory {
    const text = fs.readFileSync(path, "utf-8");
    const lines = text.split("\n").filter((l) => l.trim().length > 0);
    if (lines.length < 2) {
        throw new Error(`${path}: no data rows`);
    }
    const cols = lines[0].split(",");
    const need = ["t_fs", "re_rho_00", "re_rho_01", "im_rho_01", "purity", "max_rank", "ttn_size"];
    const idx: Record<string, number> = {};
    for (const name of need) {
        const i = cols.indexOf(name);
        if (i < 0) throw new Error(`${path}: missing column ${name}`);
        idx[name] = i;
    }
    const points: TrajectoryPoint[] = [];
    for (const line of lines.slice(1)) {
        const parts = line.split(",");
        if (parts.length !== cols.length) continue; // truncated trailing row
        points.push({
            t: Number(parts[idx["t_fs"]]),
            rho00: Number(parts[idx["re_rho_00"]]),
            reRho01: Number(parts[idx["re_rho_01"]]),
            imRho01: Number(parts[idx["im_rho_01"]]),
            purity: Number(parts[idx["purity"]]),
            maxRank: Number(parts[idx["max_rank"]]),
            size: Number(parts[idx["ttn_size"]]),
        });
    }
    if (points.length === 0) throw new Error(`${path}: no parseable rows`);
    return { label: label ?? path, points };
}

export interface BathComponent {
    kind: "drude_lorentz" | "brownian";
    lambda: number;
    gamma: number;
    omegaEff?: number;
}

export interface Manifest {
    components: BathComponent[];
    temperature: number;
}

/** Bath components out of a run manifest; the feature table lists the
 *  decomposition, while the spectral curve needs the model parameters, so a
 *  `bath.components` block is expected (the solver always writes one for
 *  model-defined baths via the resolved config). */
export function parseManifest(path: string): Manifest {
    const doc = JSON.parse(fs.readFileSync(path, "utf-8"));
    const bath = doc?.config?.bath ?? doc?.bath;
    if (!bath) throw new Error(`${path}: no bath section`);
    const rows = bath.components ?? [];
    const components: BathComponent[] = rows.map((c: any) => ({
        kind: c.kind,
        lambda: Number(c.lambda),
        gamma: Number(c.gamma),
        omegaEff: c.omega_eff === undefined ? undefined : Number(c.omega_eff),
    }));
    return { components, temperature: Number(bath.temperature ?? 0) };
}

/** J(w) for the model components, in cm^-1 against w in cm^-1. */
export function spectralDensity(components: BathComponent[], omega: number): number {
    let out = 0;
    for (const c of components) {
        if (c.kind === "drude_lorentz") {
            out += ((2 * c.lambda) / Math.PI) * ((c.gamma * omega) / (omega * omega + c.gamma * c.gamma));
        } else {
            const w2 = (c.omegaEff ?? 0) ** 2 + c.gamma ** 2;
            out +=
                ((4 * c.lambda) / Math.PI) *
                ((c.gamma * w2 * omega) /
                    ((omega * omega - w2) ** 2 + 4 * c.gamma * c.gamma * omega * omega));
        }
    }
    return out;
}

export interface SpectralCurve {
    omega: number[];
    j: number[];
}

export function spectralCurve(components: BathComponent[], omegaMax: number, n: number): SpectralCurve {
    const omega: number[] = [];
    const j: number[] = [];
    for (let i = 0; i < n; i++) {
        const w = (omegaMax * (i + 0.5)) / n;
        omega.push(w);
        j.push(spectralDensity(components, w));
    }
    return { omega, j };
}

/** Indices of local maxima, tallest first. */
export function peakBins(values: number[]): number[] {
    const peaks: number[] = [];
    for (let i = 1; i + 1 < values.length; i++) {
        if (values[i] > values[i - 1] && values[i] >= values[i + 1]) peaks.push(i);
    }
    peaks.sort((a, b) => values[b] - values[a]);
    return peaks;
}
