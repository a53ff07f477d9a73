"""Risk-aware score enhancement: unigram and collocation boosts.

Boost factors accumulate multiplicatively per token and the cap applies
once at the end, which makes the result independent of application
order.  A token inside two overlapping spans from distinct patterns is
boosted by each; repeated hits from the *same* pattern count once.
Boosts never decrease a score and never push it above the cap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .salience import TokenSalience
from .taxonomy import SpanMatch

DEFAULT_BETA_UNI = 1.5
DEFAULT_BETA_COL = 1.2
DEFAULT_CAP = 1.0


@dataclass(frozen=True)
class BoostConfig:
    beta_uni: float = DEFAULT_BETA_UNI
    beta_col: float = DEFAULT_BETA_COL
    cap: float = DEFAULT_CAP
    fuzzy: bool = False

    def __post_init__(self) -> None:
        if self.beta_uni < 1.0 or self.beta_col < 1.0:
            raise ValueError("boost multipliers must be >= 1")
        if not 0.0 < self.cap <= 1.0:
            raise ValueError("cap must be in (0, 1]")


def _capped(salience: TokenSalience, factors: list[float], cap: float) -> list[float]:
    # The cap binds the boosted value only: unboosted tokens are never
    # touched, and a boost never pushes a score below where it started
    # (relevant only for caps under 1.0, since normalized values already
    # sit in [0, 1]).
    return [
        max(base, min(cap, base * factor)) if factor > 1.0 else base
        for base, factor in zip(salience.normalized, factors)
    ]


def _current_factors(salience: TokenSalience) -> list[float]:
    factors = [1.0] * salience.n_tokens
    for event in salience.boosts:
        factors[event["token_idx"]] *= event["factor"]
    return factors


def apply_unigram_boost(
    salience: TokenSalience,
    matches: list[tuple[int, tuple[str, ...]]],
    cfg: BoostConfig,
) -> TokenSalience:
    """Boost lexicon-matched tokens by beta_uni (once per token)."""
    factors = _current_factors(salience)
    boosts = list(salience.boosts)
    for token_idx, subcats in matches:
        factors[token_idx] *= cfg.beta_uni
        boosts.append(
            {
                "token_idx": token_idx,
                "kind": "unigram",
                "ref": "|".join(subcats),
                "factor": cfg.beta_uni,
            }
        )
    return replace(
        salience, enhanced=_capped(salience, factors, cfg.cap), boosts=boosts
    )


def apply_collocation_boost(
    salience: TokenSalience,
    matches: list[SpanMatch],
    cfg: BoostConfig,
) -> TokenSalience:
    """Boost tokens inside matched spans by beta_col.

    Token-local only: tokens outside every span are untouched.  A token
    covered twice by the same pattern is boosted once for it.
    """
    factors = _current_factors(salience)
    boosts = list(salience.boosts)
    boosted_by: dict[int, set[str]] = {}
    for match in matches:
        first, last = match.token_span
        for token_idx in range(first, last + 1):
            seen = boosted_by.setdefault(token_idx, set())
            if match.pattern_id in seen:
                continue
            seen.add(match.pattern_id)
            factors[token_idx] *= cfg.beta_col
            boosts.append(
                {
                    "token_idx": token_idx,
                    "kind": "collocation",
                    "ref": match.pattern_id,
                    "factor": cfg.beta_col,
                }
            )
    return replace(
        salience, enhanced=_capped(salience, factors, cfg.cap), boosts=boosts
    )


def enhance(
    salience: TokenSalience,
    unigram_matches: list[tuple[int, tuple[str, ...]]],
    colloc_matches: list[SpanMatch],
    cfg: BoostConfig,
) -> TokenSalience:
    """Apply both boost families; order-independent by construction."""
    out = apply_unigram_boost(salience, unigram_matches, cfg)
    return apply_collocation_boost(out, colloc_matches, cfg)
