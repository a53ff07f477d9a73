/**
 * Deterministic wordpiece splitting.
 *
 * Words longer than the chunk size break into fixed-size pieces with the
 * conventional "##" continuation prefix, e.g. "litigation" ->
 * ["liti", "##gati", "##on"].  The split is a pure function of the word,
 * so piece/word alignment is reproducible without a vocabulary file.
 */

const CHUNK = 4;

export function wordToPieces(lower: string, chunk: number = CHUNK): string[] {
    if (lower.length <= chunk) {
        return [lower];
    }
    const pieces: string[] = [lower.slice(0, chunk)];
    for (let i = chunk; i < lower.length; i += chunk) {
        pieces.push("##" + lower.slice(i, i + chunk));
    }
    return pieces;
}

/** Strip continuation markers and re-join; inverse of wordToPieces. */
export function piecesToWord(pieces: string[]): string {
    return pieces.map((p) => (p.startsWith("##") ? p.slice(2) : p)).join("");
}
