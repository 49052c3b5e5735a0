"""Sentence-level BLEU and ROUGE-L for comparing logical-form strings.

Used to score how closely two serializations of a criterion agree, e.g.
between annotators or between a generated form and a reference. Tokens
are produced by padding the DSL's punctuation with spaces, so parentheses,
commas, dots and quote characters all count as tokens in their own right.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass

_EPSILON = 1e-9
_PAD_RE = re.compile(r'([(),."])')


class EmptyReferenceError(ValueError):
    """The reference tokenizes to nothing, so no score is defined."""


class EmptyCorpusError(ValueError):
    """corpus_agreement needs at least one candidate/reference pair."""


def tokenize_lf(text: str) -> list[str]:
    """Whitespace-split after padding ( ) , . and the quote character."""
    return _PAD_RE.sub(r" \1 ", text).split()


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU with clipped n-gram precisions and a brevity penalty.

    Precisions for orders 1..min(max_n, len(candidate), len(reference))
    enter a geometric mean; an order with zero matches contributes the
    smoothing floor 1e-9 instead of zeroing the product. Capping the order
    at the shorter token length keeps bleu(s, s) == 1.0 for short strings.
    """
    cand = tokenize_lf(candidate)
    ref = tokenize_lf(reference)
    if not ref:
        raise EmptyReferenceError("reference has no tokens")
    if not cand:
        return 0.0
    top = max(1, min(max_n, len(cand), len(ref)))
    log_sum = 0.0
    for n in range(1, top + 1):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        total = sum(cand_counts.values())
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        precision = matched / total if matched else _EPSILON
        log_sum += math.log(precision)
    score = math.exp(log_sum / top)
    if len(cand) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(cand))
    return score


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _lcs_length(a: list[str], b: list[str]) -> int:
    # single-row DP; a is the shorter side to keep the row small
    if len(a) > len(b):
        a, b = b, a
    row = [0] * (len(a) + 1)
    for tok_b in b:
        prev = 0
        for i, tok_a in enumerate(a, start=1):
            cur = row[i]
            row[i] = prev + 1 if tok_a == tok_b else max(row[i], row[i - 1])
            prev = cur
    return row[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """ROUGE-L: precision/recall/F1 from the longest common subsequence."""
    cand = tokenize_lf(candidate)
    ref = tokenize_lf(reference)
    if not ref:
        raise EmptyReferenceError("reference has no tokens")
    if not cand:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return RougeScore(precision, recall, f1)


def corpus_agreement(pairs: list[tuple[str, str]], max_n: int = 4) -> float:
    """Mean sentence BLEU over (candidate, reference) pairs."""
    if not pairs:
        raise EmptyCorpusError("no pairs to score")
    return sum(bleu(c, r, max_n) for c, r in pairs) / len(pairs)
