/** Record shapes shared with the core pipeline's JSONL contracts. */

export interface CoreToken {
    surface: string;
    lower: string;
    start: number;
    end: number;
    is_word: boolean;
}

export interface CoreSentence {
    sentence_id: string;
    doc_id: string;
    release_year: number;
    text: string;
    tokens: CoreToken[];
}

/** One attention record: tokens must byte-match the core's word lowers. */
export interface AttentionRecord {
    sentence_id: string;
    tokens: string[];
    scores: number[];
}

export interface TokenEmbeddingRecord {
    sentence_id: string;
    tokens: string[];
    vectors: number[][];
}

export interface SentenceEmbeddingRecord {
    sentence_id: string;
    vector: number[];
}

export interface TruncationWarning {
    sentence_id: string;
    total_pieces: number;
    kept_pieces: number;
}

export interface ExportHeader {
    model: string;
    aggregation: "mean" | "max";
    wordpiece_merge: "max" | "mean";
    level?: "token" | "sentence";
    dim?: number;
    max_pieces: number;
    warnings: TruncationWarning[];
}

export function wordLowers(sentence: CoreSentence): string[] {
    return sentence.tokens.filter((t) => t.is_word).map((t) => t.lower);
}
