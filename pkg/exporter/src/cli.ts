/**
 * Standalone exporter commands (never imported by the core):
 *
 *   node dist/cli.js attention  --sentences S.jsonl --out A.jsonl
 *                               [--model-id ID] [--aggregation mean|max]
 *                               [--max-pieces N]
 *   node dist/cli.js embeddings --sentences S.jsonl --out E.jsonl
 *                               [--model-id ID] [--level token|sentence]
 *                               [--dim D] [--max-pieces N]
 *
 * Reads the core's sentence JSONL, writes the core's attention or
 * embedding JSONL with a header line recording every aggregation choice.
 */

import { DeterministicBackend } from "./backend.js";
import {
    Aggregation,
    EmbeddingLevel,
    exportAttention,
    exportEmbeddings,
} from "./exporter.js";
import { readSentences, writeJsonl } from "./jsonl.js";

function argValue(args: string[], flag: string): string | undefined {
    const i = args.indexOf(flag);
    return i !== -1 && i + 1 < args.length ? args[i + 1] : undefined;
}

function fail(message: string): never {
    console.error(`error: ${message}`);
    process.exit(1);
}

export function main(argv: string[]): number {
    const [command, ...args] = argv;
    if (command !== "attention" && command !== "embeddings") {
        fail("expected command 'attention' or 'embeddings'");
    }
    const sentencesPath = argValue(args, "--sentences") ?? fail("--sentences is required");
    const outPath = argValue(args, "--out") ?? fail("--out is required");
    const modelId = argValue(args, "--model-id") ?? "finbert-sim-v1";
    const maxPieces = Number(argValue(args, "--max-pieces") ?? "512");
    if (!Number.isInteger(maxPieces) || maxPieces < 2) {
        fail("--max-pieces must be an integer >= 2");
    }

    const sentences = readSentences(sentencesPath);
    if (command === "attention") {
        const aggregation = (argValue(args, "--aggregation") ?? "mean") as Aggregation;
        if (aggregation !== "mean" && aggregation !== "max") {
            fail("--aggregation must be mean or max");
        }
        const backend = new DeterministicBackend(modelId);
        const result = exportAttention(sentences, backend, aggregation, maxPieces);
        writeJsonl(outPath, result.header, result.records);
        console.log(
            `attention: ${result.records.length} records, ` +
                `${result.header.warnings.length} truncation warnings -> ${outPath}`,
        );
    } else {
        const level = (argValue(args, "--level") ?? "token") as EmbeddingLevel;
        if (level !== "token" && level !== "sentence") {
            fail("--level must be token or sentence");
        }
        const dim = Number(argValue(args, "--dim") ?? "8");
        if (!Number.isInteger(dim) || dim < 1) {
            fail("--dim must be a positive integer");
        }
        const backend = new DeterministicBackend(modelId, 4, 4, dim);
        const result = exportEmbeddings(sentences, backend, level, maxPieces);
        writeJsonl(outPath, result.header, result.records);
        console.log(
            `embeddings (${level}, dim=${dim}): ${result.records.length} records -> ${outPath}`,
        );
    }
    return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
    process.exit(main(process.argv.slice(2)));
}
