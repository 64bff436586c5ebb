"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately slow and scalar so it shares no code path
with the package proper.
"""

from functools import lru_cache

import mpmath


def recursive_edit_distance(a, b, allow_transposition):
    """Exhaustive recursion over edit scripts (memoized on suffix lengths)."""
    a = tuple(a)
    b = tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        best = min(
            go(i - 1, j) + 1,
            go(i, j - 1) + 1,
            go(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1),
        )
        if (
            allow_transposition
            and i > 1
            and j > 1
            and a[i - 1] == b[j - 2]
            and a[i - 2] == b[j - 1]
        ):
            best = min(best, go(i - 2, j - 2) + 1)
        return best

    return go(len(a), len(b))


def all_sequences(alphabet_size, max_len):
    seqs = [()]
    frontier = [()]
    for _ in range(max_len):
        frontier = [s + (c,) for s in frontier for c in range(alphabet_size)]
        seqs.extend(frontier)
    return seqs


def softmax_highprec(row, dps=50):
    """Softmax at 50 decimal digits, rounded back to float."""
    with mpmath.workdps(dps):
        exps = [mpmath.e ** mpmath.mpf(x) for x in row]
        total = sum(exps)
        return [float(e / total) for e in exps]


def cross_entropy_highprec(pred, target, dps=50):
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for p, t in zip(pred, target):
            p = max(mpmath.mpf(p), mpmath.mpf("1e-12"))
            total -= mpmath.mpf(t) * mpmath.log(p)
        return float(total)


def count_stats(corpus, c_verb, c_noun):
    """Raw unigram / bigram / pair counts with plain dict arithmetic."""
    verb_uni = [0] * c_verb
    noun_uni = [0] * c_noun
    verb_bi = [[0] * c_verb for _ in range(c_verb)]
    noun_bi = [[0] * c_noun for _ in range(c_noun)]
    vn = [[0] * c_verb for _ in range(c_noun)]
    for seq in corpus:
        prev = None
        for action in seq.actions:
            verb_uni[action.verb_id] += 1
            noun_uni[action.noun_id] += 1
            vn[action.noun_id][action.verb_id] += 1
            if prev is not None:
                verb_bi[prev.verb_id][action.verb_id] += 1
                noun_bi[prev.noun_id][action.noun_id] += 1
            prev = action
    return verb_uni, noun_uni, verb_bi, noun_bi, vn
