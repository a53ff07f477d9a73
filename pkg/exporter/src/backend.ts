/**
 * Model backends produce per-piece CLS attention rows (one per
 * layer/head) and per-piece embeddings.
 *
 * The deterministic backend stands in for a served transformer: values
 * are seeded by (model id, piece content, position), so identical
 * sentences always export identical numbers while different models/ids
 * disagree.  Swapping in a real inference backend only requires
 * implementing this interface; everything downstream (aggregation,
 * wordpiece merging, scaling, JSONL contracts) is model-agnostic.
 */

export interface ModelBackend {
    readonly modelId: string;
    readonly layers: number;
    readonly heads: number;
    readonly dim: number;
    /** CLS -> piece attention, indexed [layer][head][piece], values in [0, 1). */
    clsAttention(pieces: string[]): number[][][];
    /** Contextual piece embeddings, indexed [piece][dim]. */
    pieceEmbeddings(pieces: string[]): number[][];
}

/** FNV-1a 32-bit string hash. */
function fnv1a(text: string): number {
    let h = 0x811c9dc5;
    for (let i = 0; i < text.length; i++) {
        h ^= text.charCodeAt(i);
        h = Math.imul(h, 0x01000193);
    }
    return h >>> 0;
}

/** mulberry32: tiny deterministic PRNG over a 32-bit seed. */
function mulberry32(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
        a = (a + 0x6d2b79f5) >>> 0;
        let t = a;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

export class DeterministicBackend implements ModelBackend {
    readonly modelId: string;
    readonly layers: number;
    readonly heads: number;
    readonly dim: number;

    constructor(modelId: string, layers = 4, heads = 4, dim = 8) {
        this.modelId = modelId;
        this.layers = layers;
        this.heads = heads;
        this.dim = dim;
    }

    clsAttention(pieces: string[]): number[][][] {
        const out: number[][][] = [];
        for (let layer = 0; layer < this.layers; layer++) {
            const headRows: number[][] = [];
            for (let head = 0; head < this.heads; head++) {
                headRows.push(
                    pieces.map((piece, position) => {
                        const seed = fnv1a(
                            `${this.modelId}|att|${layer}|${head}|${position}|${piece}`,
                        );
                        return mulberry32(seed)();
                    }),
                );
            }
            out.push(headRows);
        }
        return out;
    }

    pieceEmbeddings(pieces: string[]): number[][] {
        return pieces.map((piece, position) => {
            const rng = mulberry32(
                fnv1a(`${this.modelId}|emb|${position}|${piece}`),
            );
            return Array.from({ length: this.dim }, () => rng() * 2 - 1);
        });
    }
}
