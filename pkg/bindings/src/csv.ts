/** Minimal numeric CSV helpers.
 *
 * Values are written with JavaScript's default number formatting, which is
 * the shortest representation that round-trips the double exactly, so
 * handing values to the CLI and back loses no precision.
 */

export function writeCsv(header: string[], columns: number[][]): string {
    const n = columns.length > 0 ? columns[0].length : 0;
    const lines = [header.join(",")];
    for (let i = 0; i < n; i++) {
        const row = new Array<string>(columns.length);
        for (let j = 0; j < columns.length; j++) {
            row[j] = String(columns[j][i]);
        }
        lines.push(row.join(","));
    }
    return lines.join("\n") + "\n";
}

export interface CsvTable {
    header: string[];
    columns: number[][];
}

export function parseCsv(text: string): CsvTable {
    const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
    if (lines.length === 0) {
        return { header: [], columns: [] };
    }
    const header = lines[0].split(",");
    const columns: number[][] = header.map(() => new Array(lines.length - 1));
    for (let i = 1; i < lines.length; i++) {
        const cells = lines[i].split(",");
        for (let j = 0; j < header.length; j++) {
            columns[j][i - 1] = Number(cells[j]);
        }
    }
    return { header, columns };
}

export function column(table: CsvTable, name: string): number[] {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
        throw new Error(`column ${name} not in CSV (${table.header.join(", ")})`);
    }
    return table.columns[idx];
}
