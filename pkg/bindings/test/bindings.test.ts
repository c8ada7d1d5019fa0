/** End-to-end tests against the installed ridgebart CLI.
 *
 * The parity test fits the same seeded run through the binding and through
 * direct CLI invocations and requires agreement to 1e-12 (in practice the
 * numbers are identical because the binding shells out to the same core).
 */

import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { column, parseCsv } from "../src/csv.js";
import {
    DataError,
    Model,
    ShapeError,
    UsageError,
    fit,
    load,
    save,
} from "../src/index.js";

const execFileAsync = promisify(execFile);
const CLI = process.env.RIDGEBART_CLI ?? "ridgebart";

const FIT_FLAGS = {
    trees: 10,
    chains: 2,
    iters: 120,
    burnin: 60,
    thin: 2,
    seed: 7,
    activation: "relu" as const,
};

let work: string;
let x: number[][];
let y: number[];
let cliPredictions: { mean: number[]; lower: number[]; upper: number[] };

beforeAll(async () => {
    work = await mkdtemp(join(tmpdir(), "ridgebart-test-"));
    const dataPath = join(work, "fr.csv");
    await execFileAsync(CLI, [
        "simulate", "--dgp", "friedman", "--n", "200", "--seed", "21", "--out", dataPath,
    ]);

    // Direct CLI fit + predict on the generated files.
    const modelPath = join(work, "cli-model.json");
    await execFileAsync(CLI, [
        "fit",
        "--data", dataPath,
        "--schema", join(work, "fr.schema.json"),
        "--activation", FIT_FLAGS.activation,
        "--trees", String(FIT_FLAGS.trees),
        "--chains", String(FIT_FLAGS.chains),
        "--iters", String(FIT_FLAGS.iters),
        "--burnin", String(FIT_FLAGS.burnin),
        "--thin", String(FIT_FLAGS.thin),
        "--seed", String(FIT_FLAGS.seed),
        "--out", modelPath,
    ]);
    const predPath = join(work, "cli-pred.csv");
    await execFileAsync(CLI, [
        "predict", "--model", modelPath, "--data", dataPath, "--out", predPath,
    ]);
    const predTable = parseCsv(await readFile(predPath, "utf-8"));
    cliPredictions = {
        mean: column(predTable, "mean"),
        lower: column(predTable, "lower"),
        upper: column(predTable, "upper"),
    };

    // The same rows as arrays for the binding.
    const data = parseCsv(await readFile(dataPath, "utf-8"));
    const xCols = ["x1", "x2", "x3", "x4", "x5"].map((name) => column(data, name));
    const n = xCols[0].length;
    x = Array.from({ length: n }, (_, i) => xCols.map((col) => col[i]));
    y = column(data, "y");
}, 120_000);

afterAll(async () => {
    if (work) await rm(work, { recursive: true, force: true });
});

describe("binding parity with the CLI", () => {
    it("fit + predict matches CLI outputs to 1e-12", async () => {
        const model = await fit(x, x, y, FIT_FLAGS);
        const pred = await model.predict(x, x);
        expect(pred.mean.length).toBe(cliPredictions.mean.length);
        for (let i = 0; i < pred.mean.length; i++) {
            expect(Math.abs(pred.mean[i] - cliPredictions.mean[i])).toBeLessThanOrEqual(1e-12);
            expect(Math.abs(pred.lower[i] - cliPredictions.lower[i])).toBeLessThanOrEqual(1e-12);
            expect(Math.abs(pred.upper[i] - cliPredictions.upper[i])).toBeLessThanOrEqual(1e-12);
        }
    }, 120_000);

    it("save/load round trip preserves predictions exactly", async () => {
        const model = await fit(x, x, y, FIT_FLAGS);
        const path = join(work, "saved.json");
        await save(model, path);
        const restored = await load(path);
        expect(restored.bytes.equals(model.bytes)).toBe(true);
        const probe = x.slice(0, 25);
        const a = await model.predict(probe, probe);
        const b = await restored.predict(probe, probe);
        expect(b.mean).toEqual(a.mean);
        expect(b.lower).toEqual(a.lower);
        expect(b.upper).toEqual(a.upper);
    }, 120_000);
});

describe("typed errors", () => {
    it("rejects shape mismatches before any I/O", async () => {
        await expect(fit(x, x, y.slice(0, 10), FIT_FLAGS)).rejects.toBeInstanceOf(ShapeError);
        await expect(fit([[0.1], [0.2, 0.3]] as number[][], x, y)).rejects.toBeInstanceOf(
            ShapeError,
        );
        const model = await fit(x.slice(0, 40), x.slice(0, 40), y.slice(0, 40), {
            ...FIT_FLAGS, iters: 20, burnin: 10, thin: 1,
        });
        await expect(
            model.predict([[0.1, 0.2]], [[0.1, 0.2]]),
        ).rejects.toBeInstanceOf(ShapeError);
    }, 120_000);

    it("maps CLI exit codes onto error classes", async () => {
        await expect(
            fit(x, x, y, { ...FIT_FLAGS, activation: "sigmoid" as never }),
        ).rejects.toBeInstanceOf(UsageError);
        expect(() => new Model(Buffer.from("not json"))).toThrow(DataError);
    }, 120_000);

    it("rejects z differing from shared smoothing columns", async () => {
        const model = await fit(x.slice(0, 40), x.slice(0, 40), y.slice(0, 40), {
            ...FIT_FLAGS, iters: 20, burnin: 10, thin: 1,
        });
        const zOther = x.slice(0, 5).map((row) => row.map((v) => v * 0.5));
        await expect(model.predict(x.slice(0, 5), zOther)).rejects.toBeInstanceOf(DataError);
    }, 120_000);
});
