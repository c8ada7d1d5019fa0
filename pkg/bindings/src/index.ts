/** Array-based wrapper around the ridgebart command line interface.
 *
 * The fitting and prediction core is never reimplemented here: every call
 * shells out to the installed `ridgebart` executable (override with the
 * RIDGEBART_CLI environment variable or the `cli` option), exchanging data
 * through CSV files and the versioned JSON model format. Results are
 * therefore numerically identical to direct CLI runs with equal seeds and
 * options. Model handles are immutable after fitting.
 */

import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { column, parseCsv, writeCsv } from "./csv.js";
import {
    CliError,
    DataError,
    NumericalError,
    RidgeBartError,
    ShapeError,
    UsageError,
    errorForExit,
} from "./errors.js";

export {
    CliError,
    DataError,
    NumericalError,
    RidgeBartError,
    ShapeError,
    UsageError,
};

const execFileAsync = promisify(execFile);

export type Activation = "cosine" | "tanh" | "relu" | "constant";
export type Outcome = "gaussian" | "binary";

export interface FitOptions {
    outcome?: Outcome;
    activation?: Activation;
    trees?: number;
    ridge?: number;
    chains?: number;
    iters?: number;
    burnin?: number;
    thin?: number;
    seed?: number;
    rotateOmega?: boolean;
    nu?: number;
    probRhoLt?: number;
    rhoThreshold?: number;
    gamma?: number;
    /** Chains run in this many CLI worker processes. */
    jobs?: number;
    /** Indices of x columns holding categorical level codes. */
    categorical?: number[];
    /** CLI executable; defaults to RIDGEBART_CLI or "ridgebart". */
    cli?: string;
}

export interface Prediction {
    /** Posterior mean (gaussian) or success probability (binary). */
    mean: number[];
    lower: number[];
    upper: number[];
}

function cliPath(explicit?: string): string {
    return explicit ?? process.env.RIDGEBART_CLI ?? "ridgebart";
}

async function runCli(cli: string, args: string[]): Promise<void> {
    try {
        await execFileAsync(cli, args);
    } catch (err) {
        const anyErr = err as { code?: number | string; stderr?: string; message?: string };
        if (typeof anyErr.code === "number") {
            const detail = (anyErr.stderr ?? "").trim() || `exit code ${anyErr.code}`;
            throw errorForExit(anyErr.code, detail);
        }
        throw new CliError(`could not run ${cli}: ${anyErr.message ?? String(err)}`);
    }
}

function checkMatrix(name: string, matrix: number[][], rows?: number): number {
    if (!Array.isArray(matrix) || matrix.length === 0 || matrix[0].length === 0) {
        throw new ShapeError(`${name} must be a nonempty row-major matrix`);
    }
    const width = matrix[0].length;
    for (const row of matrix) {
        if (row.length !== width) {
            throw new ShapeError(`${name} has ragged rows (${row.length} vs ${width})`);
        }
    }
    if (rows !== undefined && matrix.length !== rows) {
        throw new ShapeError(`${name} has ${matrix.length} rows, expected ${rows}`);
    }
    return width;
}

function toColumns(matrix: number[][]): number[][] {
    const width = matrix[0].length;
    const out: number[][] = [];
    for (let j = 0; j < width; j++) {
        out.push(matrix.map((row) => row[j]));
    }
    return out;
}

interface ModelSchema {
    x: string[];
    z: string[];
    outcome: string;
    categorical: string[];
}

/** Immutable handle on a fitted model: the raw model-file bytes plus the
 * metadata needed to build prediction inputs. */
export class Model {
    readonly bytes: Buffer;
    readonly schema: ModelSchema;
    readonly binary: boolean;
    private readonly cli: string;

    constructor(bytes: Buffer, cliExecutable?: string) {
        this.bytes = bytes;
        this.cli = cliPath(cliExecutable);
        let doc: { format?: string; schema?: ModelSchema; binary?: boolean };
        try {
            doc = JSON.parse(bytes.toString("utf-8"));
        } catch {
            throw new DataError("model bytes are not valid JSON");
        }
        if (doc.format !== "ridgebart-model" || !doc.schema) {
            throw new DataError("model bytes are not a ridgebart model with a schema");
        }
        this.schema = doc.schema;
        this.binary = Boolean(doc.binary);
    }

    static async load(path: string, cliExecutable?: string): Promise<Model> {
        return new Model(await readFile(path), cliExecutable);
    }

    async save(path: string): Promise<void> {
        await writeFile(path, this.bytes);
    }

    /** Predict on new rows; x and z are row-major with the same column
     * counts as at fit time. */
    async predict(x: number[][], z: number[][], level = 0.95): Promise<Prediction> {
        const p = checkMatrix("x", x);
        const q = checkMatrix("z", z, x.length);
        const sharedZ = this.schema.z.every((name) => this.schema.x.includes(name));
        if (p !== this.schema.x.length) {
            throw new ShapeError(`x has ${p} columns, model expects ${this.schema.x.length}`);
        }
        if (q !== this.schema.z.length) {
            throw new ShapeError(`z has ${q} columns, model expects ${this.schema.z.length}`);
        }
        if (sharedZ) {
            // The model smooths over (a subset of) its covariate columns;
            // a distinct z matrix would be silently ignored, so reject it.
            const zIdx = this.schema.z.map((name) => this.schema.x.indexOf(name));
            for (let i = 0; i < x.length; i++) {
                for (let j = 0; j < zIdx.length; j++) {
                    if (z[i][j] !== x[i][zIdx[j]]) {
                        throw new DataError(
                            "model shares smoothing columns with x, but z differs from those columns",
                        );
                    }
                }
            }
        }
        const work = await mkdtemp(join(tmpdir(), "ridgebart-"));
        try {
            const header = [...this.schema.x];
            const columns = toColumns(x);
            if (!sharedZ) {
                header.push(...this.schema.z);
                columns.push(...toColumns(z));
            }
            const dataPath = join(work, "data.csv");
            const modelPath = join(work, "model.json");
            const outPath = join(work, "pred.csv");
            await writeFile(dataPath, writeCsv(header, columns));
            await writeFile(modelPath, this.bytes);
            await runCli(this.cli, [
                "predict",
                "--model", modelPath,
                "--data", dataPath,
                "--level", String(level),
                "--out", outPath,
            ]);
            const table = parseCsv(await readFile(outPath, "utf-8"));
            const prefix = this.binary ? "prob_" : "";
            return {
                mean: column(table, `${prefix}mean`),
                lower: column(table, `${prefix}lower`),
                upper: column(table, `${prefix}upper`),
            };
        } finally {
            await rm(work, { recursive: true, force: true });
        }
    }
}

/** Fit a model on row-major arrays.
 *
 * Column names x1..xp / z1..zq are generated internally; when z duplicates
 * x column-for-column the shared-column schema is used, matching a direct
 * CLI fit on the same values.
 */
export async function fit(
    x: number[][],
    z: number[][],
    y: number[],
    options: FitOptions = {},
): Promise<Model> {
    const p = checkMatrix("x", x);
    const q = checkMatrix("z", z, x.length);
    if (!Array.isArray(y) || y.length !== x.length) {
        throw new ShapeError(`y has ${y?.length ?? 0} entries, expected ${x.length}`);
    }
    for (const idx of options.categorical ?? []) {
        if (!Number.isInteger(idx) || idx < 0 || idx >= p) {
            throw new ShapeError(`categorical index ${idx} outside 0..${p - 1}`);
        }
    }
    const xNames = Array.from({ length: p }, (_, j) => `x${j + 1}`);
    const sharedZ =
        p === q && x.every((row, i) => row.every((v, j) => v === z[i][j]));
    const zNames = sharedZ ? xNames : Array.from({ length: q }, (_, j) => `z${j + 1}`);

    const header = [...xNames];
    const columns = toColumns(x);
    if (!sharedZ) {
        header.push(...zNames);
        columns.push(...toColumns(z));
    }
    header.push("y");
    columns.push(y);

    const cli = cliPath(options.cli);
    const work = await mkdtemp(join(tmpdir(), "ridgebart-"));
    try {
        const dataPath = join(work, "data.csv");
        const schemaPath = join(work, "schema.json");
        const modelPath = join(work, "model.json");
        await writeFile(dataPath, writeCsv(header, columns));
        await writeFile(
            schemaPath,
            JSON.stringify({
                x: xNames,
                z: zNames,
                outcome: "y",
                categorical: (options.categorical ?? []).map((j) => xNames[j]),
            }),
        );
        const args = [
            "fit",
            "--data", dataPath,
            "--schema", schemaPath,
            "--out", modelPath,
            "--outcome", options.outcome ?? "gaussian",
            "--activation", options.activation ?? "cosine",
            "--trees", String(options.trees ?? 50),
            "--ridge", String(options.ridge ?? 1),
            "--chains", String(options.chains ?? 10),
            "--iters", String(options.iters ?? 2000),
            "--burnin", String(options.burnin ?? 1000),
            "--thin", String(options.thin ?? 1),
            "--seed", String(options.seed ?? 0),
            "--nu", String(options.nu ?? 3.0),
            "--prob-rho-lt", String(options.probRhoLt ?? 0.5),
            "--rho-threshold", String(options.rhoThreshold ?? 1.0),
            "--jobs", String(options.jobs ?? 1),
        ];
        if (options.rotateOmega) args.push("--rotate-omega");
        if (options.gamma !== undefined) args.push("--gamma", String(options.gamma));
        await runCli(cli, args);
        return new Model(await readFile(modelPath), options.cli);
    } finally {
        await rm(work, { recursive: true, force: true });
    }
}

/** Convenience forms mirroring the handle methods. */
export async function predict(
    model: Model,
    x: number[][],
    z: number[][],
    level = 0.95,
): Promise<Prediction> {
    return model.predict(x, z, level);
}

export async function save(model: Model, path: string): Promise<void> {
    return model.save(path);
}

export async function load(path: string, cliExecutable?: string): Promise<Model> {
    return Model.load(path, cliExecutable);
}
