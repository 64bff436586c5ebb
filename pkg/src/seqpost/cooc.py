"""Co-occurrence statistics over a label corpus.

Builds unigram marginals, per-axis bigram transition conditionals and the
verb-given-noun conditional from a corpus of (verb, noun) sequences, and
evaluates the transition indicator used by the refinement stage:

    f(prev, next) = ln( p(next|prev) / (p(prev) * p(next)) ) / -ln( p(next|prev) )

Two indicator modes are provided.  ``as_written`` keeps the conditional
probability in the numerator of the PMI ratio; ``standard_npmi`` substitutes
the joint p(prev, next) in both the ratio and the normalizer, which is the
classical normalized pointwise mutual information.  All probabilities are
clamped into [prob_clamp_min, prob_clamp_max] before taking logs, so the
score is finite for every index pair.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .vocab import ActionSequence, Vocabulary, validate_sequence


class IndicatorMode(Enum):
    AS_WRITTEN = "as_written"
    STANDARD_NPMI = "standard_npmi"


@dataclass(frozen=True)
class SmoothingConfig:
    add_k: float = 1.0
    prob_clamp_min: float = 1e-6
    prob_clamp_max: float = 1.0 - 1e-6

    def __post_init__(self):
        if self.add_k < 0:
            raise ValueError("add_k must be nonnegative")
        if not (0.0 < self.prob_clamp_min < 0.5):
            raise ValueError("prob_clamp_min must lie in (0, 0.5)")
        if not (0.5 < self.prob_clamp_max < 1.0):
            raise ValueError("prob_clamp_max must lie in (0.5, 1)")


@dataclass(frozen=True)
class CoocStats:
    verb_marginal: np.ndarray  # (C_verb,)
    noun_marginal: np.ndarray  # (C_noun,)
    verb_transition: np.ndarray  # (C_verb, C_verb), row-stochastic
    noun_transition: np.ndarray  # (C_noun, C_noun), row-stochastic
    verb_given_noun: np.ndarray  # (C_noun, C_verb), row-stochastic
    smoothing: SmoothingConfig
    corpus_fingerprint: str

    @property
    def c_verb(self) -> int:
        return self.verb_marginal.shape[0]

    @property
    def c_noun(self) -> int:
        return self.noun_marginal.shape[0]

    def marginal(self, axis: str) -> np.ndarray:
        return self.verb_marginal if axis == "verb" else self.noun_marginal

    def transition(self, axis: str) -> np.ndarray:
        return self.verb_transition if axis == "verb" else self.noun_transition

    def to_json(self) -> str:
        return json.dumps(
            {
                "c_verb": self.c_verb,
                "c_noun": self.c_noun,
                "verb_marginal": self.verb_marginal.tolist(),
                "noun_marginal": self.noun_marginal.tolist(),
                "verb_transition": self.verb_transition.tolist(),
                "noun_transition": self.noun_transition.tolist(),
                "verb_given_noun": self.verb_given_noun.tolist(),
                "smoothing": {
                    "add_k": self.smoothing.add_k,
                    "prob_clamp_min": self.smoothing.prob_clamp_min,
                    "prob_clamp_max": self.smoothing.prob_clamp_max,
                },
                "corpus_fingerprint": self.corpus_fingerprint,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CoocStats":
        obj = json.loads(text)
        smoothing = SmoothingConfig(**obj["smoothing"])
        return cls(
            verb_marginal=np.array(obj["verb_marginal"], dtype=np.float64),
            noun_marginal=np.array(obj["noun_marginal"], dtype=np.float64),
            verb_transition=np.array(obj["verb_transition"], dtype=np.float64),
            noun_transition=np.array(obj["noun_transition"], dtype=np.float64),
            verb_given_noun=np.array(obj["verb_given_noun"], dtype=np.float64),
            smoothing=smoothing,
            corpus_fingerprint=obj["corpus_fingerprint"],
        )


def corpus_fingerprint(corpus: list[ActionSequence]) -> str:
    digest = hashlib.sha256()
    for seq in corpus:
        digest.update(seq.to_json().encode())
        digest.update(b"\n")
    return digest.hexdigest()


def _normalize_rows(counts: np.ndarray, add_k: float) -> np.ndarray:
    counts = counts + add_k
    totals = counts.sum(axis=1)
    out = np.empty_like(counts)
    for i, total in enumerate(totals):
        if total > 0:
            out[i] = counts[i] / total
        else:
            # Class i never appears as a context with add_k == 0; there is no
            # evidence either way, so fall back to a uniform row rather than
            # refusing to build.
            out[i] = 1.0 / counts.shape[1]
    return out


def build_stats(
    corpus: list[ActionSequence],
    verb_vocab: Vocabulary,
    noun_vocab: Vocabulary,
    cfg: SmoothingConfig,
) -> CoocStats:
    """Count unigrams, within-sequence bigrams and (noun, verb) pairs.

    Marginals pool all positions of all sequences; bigrams never cross
    episode boundaries.  All counts receive add_k before normalization.
    """
    if not corpus:
        raise ValueError("empty corpus")
    c_verb, c_noun = len(verb_vocab), len(noun_vocab)

    verb_uni = np.zeros(c_verb)
    noun_uni = np.zeros(c_noun)
    verb_bi = np.zeros((c_verb, c_verb))
    noun_bi = np.zeros((c_noun, c_noun))
    vn_pair = np.zeros((c_noun, c_verb))

    for seq in corpus:
        violations = validate_sequence(seq, verb_vocab, noun_vocab)
        if violations:
            first = violations[0]
            raise ValueError(f"episode {seq.episode_id!r}: {first.message}")
        prev = None
        for action in seq.actions:
            verb_uni[action.verb_id] += 1
            noun_uni[action.noun_id] += 1
            vn_pair[action.noun_id, action.verb_id] += 1
            if prev is not None:
                verb_bi[prev.verb_id, action.verb_id] += 1
                noun_bi[prev.noun_id, action.noun_id] += 1
            prev = action

    verb_marginal = (verb_uni + cfg.add_k) / (verb_uni.sum() + cfg.add_k * c_verb)
    noun_marginal = (noun_uni + cfg.add_k) / (noun_uni.sum() + cfg.add_k * c_noun)

    return CoocStats(
        verb_marginal=verb_marginal,
        noun_marginal=noun_marginal,
        verb_transition=_normalize_rows(verb_bi, cfg.add_k),
        noun_transition=_normalize_rows(noun_bi, cfg.add_k),
        verb_given_noun=_normalize_rows(vn_pair, cfg.add_k),
        smoothing=cfg,
        corpus_fingerprint=corpus_fingerprint(corpus),
    )


def transition_score_row(
    stats: CoocStats, prev: int, axis: str, mode: IndicatorMode
) -> np.ndarray:
    """Indicator scores for all successor classes of ``prev`` on one axis."""
    lo, hi = stats.smoothing.prob_clamp_min, stats.smoothing.prob_clamp_max
    marginal = stats.marginal(axis)
    cond = stats.transition(axis)[prev]
    m_prev = min(max(float(marginal[prev]), lo), hi)
    m_next = np.clip(marginal, lo, hi)
    if mode is IndicatorMode.AS_WRITTEN:
        num = np.clip(cond, lo, hi)
    else:
        num = np.clip(cond * float(marginal[prev]), lo, hi)
    log_num = np.log(num)
    return (log_num - np.log(m_prev * m_next)) / -log_num


def transition_score(
    stats: CoocStats, prev: int, next_: int, axis: str, mode: IndicatorMode
) -> float:
    return float(transition_score_row(stats, prev, axis, mode)[next_])


def verb_given_noun(stats: CoocStats, verb: int, noun: int) -> float:
    """Stored p(V = verb | N = noun), without clamping."""
    return float(stats.verb_given_noun[noun, verb])
