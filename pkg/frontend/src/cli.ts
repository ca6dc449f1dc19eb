#!/usr/bin/env node

// ttnheom-plot --kind dynamics --in a.csv b.csv --out fig.svg
// ttnheom-plot --kind ranks    --in a.csv --out ranks.svg
// ttnheom-plot --kind spectral --manifest manifest.json --out j.svg

import fs from "fs";
import path from "path";

import { parseManifest, parseTrajectory } from "./data";
import { dynamicsFigure, ranksFigure, spectralFigure } from "./figures";

interface Args {
    kind: string;
    inputs: string[];
    manifest?: string;
    labels: string[];
    out: string;
}

function parseArgs(argv: string[]): Args {
    const args: Args = { kind: "", inputs: [], labels: [], out: "figure.svg" };
    let i = 0;
    while (i < argv.length) {
        const a = argv[i];
        switch (a) {
            case "--kind":
                args.kind = argv[++i];
                break;
            case "--in": {
                while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
                    args.inputs.push(argv[++i]);
                }
                break;
            }
            case "--label": {
                while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
                    args.labels.push(argv[++i]);
                }
                break;
            }
            case "--manifest":
                args.manifest = argv[++i];
                break;
            case "--out":
                args.out = argv[++i];
                break;
            default:
                throw new Error(`unknown argument ${a}`);
        }
        i++;
    }
    if (!["dynamics", "ranks", "spectral"].includes(args.kind)) {
        throw new Error(`--kind must be dynamics, ranks or spectral (got "${args.kind}")`);
    }
    return args;
}

export function makeFigure(args: Args): string {
    if (args.kind === "spectral") {
        const source = args.manifest ?? args.inputs[0];
        if (!source) throw new Error("spectral figures need --manifest (or --in) pointing to manifest.json");
        const manifest = parseManifest(source);
        if (manifest.components.length === 0) {
            throw new Error(`${source}: manifest carries no model components to plot`);
        }
        return spectralFigure(manifest.components, path.basename(path.dirname(path.resolve(source))));
    }
    if (args.inputs.length === 0) throw new Error("--in requires at least one trajectory.csv");
    const trajectories = args.inputs.map((p, i) =>
        parseTrajectory(p, args.labels[i] ?? path.basename(path.dirname(path.resolve(p))) ?? p)
    );
    return args.kind === "dynamics" ? dynamicsFigure(trajectories) : ranksFigure(trajectories);
}

export function main(argv: string[]): number {
    let args: Args;
    try {
        args = parseArgs(argv);
        const svg = makeFigure(args);
        fs.writeFileSync(args.out, svg);
        console.log(`wrote ${args.out}`);
        return 0;
    } catch (err) {
        console.error(String(err instanceof Error ? err.message : err));
        return 1;
    }
}

if (require.main === module) {
    process.exit(main(process.argv.slice(2)));
}
