/** Error classes mirroring the CLI's exit-code contract. */

/** Base class for everything thrown by this package. */
export class RidgeBartError extends Error {
    constructor(message: string) {
        super(message);
        this.name = new.target.name;
    }
}

/** Inputs whose shapes or types are inconsistent (raised before any I/O). */
export class ShapeError extends RidgeBartError {}

/** CLI rejected the invocation (exit code 2). */
export class UsageError extends RidgeBartError {}

/** CLI rejected the data or model file (exit code 3). */
export class DataError extends RidgeBartError {}

/** CLI hit a numerical failure (exit code 4). */
export class NumericalError extends RidgeBartError {}

/** CLI missing, crashed, or returned an unknown code. */
export class CliError extends RidgeBartError {}

export function errorForExit(code: number, message: string): RidgeBartError {
    if (code === 2) return new UsageError(message);
    if (code === 3) return new DataError(message);
    if (code === 4) return new NumericalError(message);
    return new CliError(message);
}
