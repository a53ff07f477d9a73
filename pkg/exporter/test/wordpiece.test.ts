import { describe, expect, it } from "vitest";

import { piecesToWord, wordToPieces } from "../src/wordpiece.js";

describe("wordToPieces", () => {
    it("keeps short words whole", () => {
        expect(wordToPieces("risk")).toEqual(["risk"]);
        expect(wordToPieces("a")).toEqual(["a"]);
    });

    it("splits long words with continuation markers", () => {
        expect(wordToPieces("litigation")).toEqual(["liti", "##gati", "##on"]);
    });

    it("round-trips through piecesToWord", () => {
        for (const word of ["cybersecurity", "a-shares", "cash", "impairment"]) {
            expect(piecesToWord(wordToPieces(word))).toBe(word);
        }
    });

    it("is deterministic", () => {
        expect(wordToPieces("substantially")).toEqual(wordToPieces("substantially"));
    });
});
