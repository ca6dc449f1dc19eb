import fs from "fs";
import os from "os";
import path from "path";

export const TABLE1 = {
    temperature: 300.0,
    n_pade: 3,
    coupling_id: "Q",
    components: [
        { kind: "drude_lorentz", lambda: 715.73, gamma: 54.45 },
        { kind: "brownian", lambda: 330.0, gamma: 50.0, omega_eff: 1663.0 },
        { kind: "brownian", lambda: 25.6, gamma: 50.0, omega_eff: 1416.0 },
        { kind: "brownian", lambda: 186.0, gamma: 50.0, omega_eff: 1376.0 },
        { kind: "brownian", lambda: 161.7, gamma: 50.0, omega_eff: 1243.0 },
        { kind: "brownian", lambda: 77.3, gamma: 50.0, omega_eff: 1193.0 },
        { kind: "brownian", lambda: 26.5, gamma: 50.0, omega_eff: 784.0 },
        { kind: "brownian", lambda: 32.0, gamma: 50.0, omega_eff: 665.0 },
        { kind: "brownian", lambda: 14.9, gamma: 50.0, omega_eff: 442.0 },
    ],
};

export function tmpdir(): string {
    return fs.mkdtempSync(path.join(os.tmpdir(), "ttnheom-plot-"));
}

const HEADER =
    "t_fs,re_rho_00,im_rho_00,re_rho_01,im_rho_01,re_rho_11,im_rho_11,purity,max_rank,ttn_size,wall_ms";

/** Damped-oscillation trajectory with the solver's exact column layout. */
export function writeTrajectory(file: string, n = 40, phase = 0): void {
    const rows = [HEADER];
    for (let i = 0; i < n; i++) {
        const t = 0.5 * i;
        const decay = Math.exp(-t / 30);
        const rho00 = 0.5 + 0.3 * (1 - decay) * Math.cos(0.3 * t + phase);
        const re01 = 0.5 * decay * Math.cos(0.2 * t);
        const im01 = -0.5 * decay * Math.sin(0.2 * t);
        const purity = 0.5 + 0.5 * decay;
        const rank = Math.min(60, 3 + 2 * i);
        rows.push(
            [t, rho00, 0, re01, im01, 1 - rho00, 0, purity, rank, 1000 * rank, 12.5 * i].join(",")
        );
    }
    fs.writeFileSync(file, rows.join("\n") + "\n");
}

export function writeManifest(file: string): void {
    const doc = {
        ttnheom_version: "0.1.0",
        config: { bath: TABLE1, schedule: { t_end: 100.0, output_dt: 0.5 } },
    };
    fs.writeFileSync(file, JSON.stringify(doc, null, 2));
}
