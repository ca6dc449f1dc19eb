/** Figure builders: dynamics, rank growth, spectral density. */

import { BathComponent, spectralCurve, Trajectory } from "./data";
import { PanelSpec, renderFigure } from "./svg";

export function dynamicsFigure(trajectories: Trajectory[]): string {
    const pop: PanelSpec = {
        title: "Ground-state population",
        xlabel: "t (fs)",
        ylabel: "rho_00",
        series: trajectories.map((tr) => ({
            label: tr.label,
            x: tr.points.map((p) => p.t),
            y: tr.points.map((p) => p.rho00),
        })),
    };
    const purity: PanelSpec = {
        title: "Purity",
        xlabel: "t (fs)",
        ylabel: "Tr rho^2",
        yMax: 1.0,
        series: trajectories.map((tr) => ({
            label: tr.label,
            x: tr.points.map((p) => p.t),
            y: tr.points.map((p) => p.purity),
        })),
    };
    return renderFigure([pop, purity]);
}

export function ranksFigure(trajectories: Trajectory[]): string {
    const rank: PanelSpec = {
        title: "Maximal bond rank",
        xlabel: "t (fs)",
        ylabel: "max rank",
        yMin: 0,
        series: trajectories.map((tr) => ({
            label: tr.label,
            x: tr.points.map((p) => p.t),
            y: tr.points.map((p) => p.maxRank),
        })),
    };
    const size: PanelSpec = {
        title: "Network size",
        xlabel: "t (fs)",
        ylabel: "elements",
        yMin: 0,
        series: trajectories.map((tr) => ({
            label: tr.label,
            x: tr.points.map((p) => p.t),
            y: tr.points.map((p) => p.size),
        })),
    };
    return renderFigure([rank, size]);
}

export const SPECTRAL_BINS = 400;

export function spectralFigure(components: BathComponent[], label: string): string {
    const maxEff = Math.max(100, ...components.map((c) => c.omegaEff ?? c.gamma));
    const curve = spectralCurve(components, 1.25 * maxEff + 200, SPECTRAL_BINS);
    const panel: PanelSpec = {
        title: "Bath spectral density",
        xlabel: "omega (cm^-1)",
        ylabel: "J(omega) (cm^-1)",
        yMin: 0,
        series: [{ label, x: curve.omega, y: curve.j }],
    };
    return renderFigure([panel]);
}
