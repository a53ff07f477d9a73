/**
 * Core export logic: sentences JSONL in, attention/embedding JSONL out.
 *
 * Per sentence:
 *   1. split each word token (core lower form) into wordpieces;
 *   2. run the backend over [CLS] + pieces, truncating at the piece
 *      budget (words cut entirely score 0 / embed as zeros, and a
 *      truncation warning is recorded in the header);
 *   3. aggregate the CLS->piece attention across layers/heads
 *      (mean or max, recorded in the header);
 *   4. merge pieces to word level: max over pieces for attention,
 *      mean over pieces for embeddings;
 *   5. min-max scale attention to [0, 1] per sentence (a constant or
 *      singleton row scales to all ones).
 *
 * The output token lists are copied verbatim from the core's word-token
 * lower forms, so the core's alignment validator accepts every record
 * produced from core-emitted sentences.
 */

import { ModelBackend } from "./backend.js";
import { wordToPieces } from "./wordpiece.js";
import {
    AttentionRecord,
    CoreSentence,
    ExportHeader,
    SentenceEmbeddingRecord,
    TokenEmbeddingRecord,
    TruncationWarning,
    wordLowers,
} from "./types.js";

export type Aggregation = "mean" | "max";
export type EmbeddingLevel = "token" | "sentence";

const DEFAULT_MAX_PIECES = 512;

interface PiecePlan {
    /** piece strings for every kept piece, in order */
    pieces: string[];
    /** for each word, indices into `pieces` (empty if fully truncated) */
    wordPieceIndex: number[][];
    warning: TruncationWarning | null;
}

/** Budget pieces across words; the CLS position consumes one slot. */
export function planPieces(
    sentenceId: string,
    words: string[],
    maxPieces: number,
): PiecePlan {
    const budget = Math.max(0, maxPieces - 1);
    const pieces: string[] = [];
    const wordPieceIndex: number[][] = [];
    let total = 0;
    for (const word of words) {
        const wordPieces = wordToPieces(word);
        total += wordPieces.length;
        const kept: number[] = [];
        for (const piece of wordPieces) {
            if (pieces.length >= budget) {
                break;
            }
            kept.push(pieces.length);
            pieces.push(piece);
        }
        wordPieceIndex.push(kept);
    }
    const warning: TruncationWarning | null =
        total > budget
            ? { sentence_id: sentenceId, total_pieces: total, kept_pieces: pieces.length }
            : null;
    return { pieces, wordPieceIndex, warning };
}

/** Aggregate CLS rows across layers/heads into one per-piece vector. */
export function aggregateHeads(
    rows: number[][][],
    aggregation: Aggregation,
): number[] {
    const nPieces = rows[0]?.[0]?.length ?? 0;
    const out = new Array<number>(nPieces).fill(
        aggregation === "max" ? -Infinity : 0,
    );
    let count = 0;
    for (const layer of rows) {
        for (const head of layer) {
            count++;
            for (let i = 0; i < nPieces; i++) {
                out[i] = aggregation === "max" ? Math.max(out[i], head[i]) : out[i] + head[i];
            }
        }
    }
    if (aggregation === "mean" && count > 0) {
        for (let i = 0; i < nPieces; i++) {
            out[i] /= count;
        }
    }
    return out;
}

/** Word attention = max over that word's piece attentions (0 if cut). */
export function mergeAttentionToWords(
    pieceScores: number[],
    wordPieceIndex: number[][],
): number[] {
    return wordPieceIndex.map((indices) =>
        indices.length === 0
            ? 0
            : Math.max(...indices.map((i) => pieceScores[i])),
    );
}

/** Word embedding = mean over that word's piece vectors (zeros if cut). */
export function mergeEmbeddingsToWords(
    pieceVectors: number[][],
    wordPieceIndex: number[][],
    dim: number,
): number[][] {
    return wordPieceIndex.map((indices) => {
        const acc = new Array<number>(dim).fill(0);
        if (indices.length === 0) {
            return acc;
        }
        for (const i of indices) {
            const vec = pieceVectors[i];
            for (let d = 0; d < dim; d++) {
                acc[d] += vec[d];
            }
        }
        return acc.map((v) => v / indices.length);
    });
}

/** Per-sentence min-max into [0, 1]; constant rows become all ones. */
export function minMaxScale(values: number[]): number[] {
    if (values.length === 0) {
        return [];
    }
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    if (hi === lo) {
        return values.map(() => 1.0);
    }
    return values.map((v) => (v - lo) / (hi - lo));
}

export interface AttentionExport {
    header: ExportHeader;
    records: AttentionRecord[];
}

export function exportAttention(
    sentences: CoreSentence[],
    backend: ModelBackend,
    aggregation: Aggregation = "mean",
    maxPieces: number = DEFAULT_MAX_PIECES,
): AttentionExport {
    const warnings: TruncationWarning[] = [];
    const records: AttentionRecord[] = [];
    for (const sentence of sentences) {
        const words = wordLowers(sentence);
        const plan = planPieces(sentence.sentence_id, words, maxPieces);
        if (plan.warning) {
            warnings.push(plan.warning);
        }
        let scores: number[] = [];
        if (words.length > 0) {
            const rows = backend.clsAttention(plan.pieces);
            const perPiece = aggregateHeads(rows, aggregation);
            scores = minMaxScale(mergeAttentionToWords(perPiece, plan.wordPieceIndex));
        }
        records.push({ sentence_id: sentence.sentence_id, tokens: words, scores });
    }
    records.sort((a, b) => (a.sentence_id < b.sentence_id ? -1 : 1));
    return {
        header: {
            model: backend.modelId,
            aggregation,
            wordpiece_merge: "max",
            max_pieces: maxPieces,
            warnings,
        },
        records,
    };
}

export interface EmbeddingExport {
    header: ExportHeader;
    records: (TokenEmbeddingRecord | SentenceEmbeddingRecord)[];
}

export function exportEmbeddings(
    sentences: CoreSentence[],
    backend: ModelBackend,
    level: EmbeddingLevel = "token",
    maxPieces: number = DEFAULT_MAX_PIECES,
): EmbeddingExport {
    const warnings: TruncationWarning[] = [];
    const records: (TokenEmbeddingRecord | SentenceEmbeddingRecord)[] = [];
    for (const sentence of sentences) {
        const words = wordLowers(sentence);
        const plan = planPieces(sentence.sentence_id, words, maxPieces);
        if (plan.warning) {
            warnings.push(plan.warning);
        }
        const pieceVectors =
            words.length > 0 ? backend.pieceEmbeddings(plan.pieces) : [];
        const wordVectors = mergeEmbeddingsToWords(
            pieceVectors,
            plan.wordPieceIndex,
            backend.dim,
        );
        if (level === "token") {
            records.push({
                sentence_id: sentence.sentence_id,
                tokens: words,
                vectors: wordVectors,
            });
        } else {
            const acc = new Array<number>(backend.dim).fill(0);
            for (const vec of wordVectors) {
                for (let d = 0; d < backend.dim; d++) {
                    acc[d] += vec[d];
                }
            }
            const n = Math.max(1, wordVectors.length);
            records.push({
                sentence_id: sentence.sentence_id,
                vector: acc.map((v) => v / n),
            });
        }
    }
    records.sort((a, b) => (a.sentence_id < b.sentence_id ? -1 : 1));
    return {
        header: {
            model: backend.modelId,
            aggregation: "mean",
            wordpiece_merge: "mean",
            level,
            dim: backend.dim,
            max_pieces: maxPieces,
            warnings,
        },
        records,
    };
}
