/** Line-delimited JSON helpers for the core's file contracts. */

import * as fs from "node:fs";

import { CoreSentence } from "./types.js";

export function readSentences(path: string): CoreSentence[] {
    const sentences: CoreSentence[] = [];
    const lines = fs.readFileSync(path, "utf-8").split("\n");
    for (const line of lines) {
        const trimmed = line.trim();
        if (!trimmed) {
            continue;
        }
        const obj = JSON.parse(trimmed);
        if ("_meta" in obj) {
            continue;
        }
        sentences.push(obj as CoreSentence);
    }
    return sentences;
}

/** Write a header record followed by data records, one object per line. */
export function writeJsonl(
    path: string,
    header: object,
    records: object[],
): void {
    const lines = [JSON.stringify({ _meta: header })];
    for (const record of records) {
        lines.push(JSON.stringify(record));
    }
    const tmp = `${path}.tmp`;
    fs.writeFileSync(tmp, lines.join("\n") + "\n", "utf-8");
    fs.renameSync(tmp, path);
}
