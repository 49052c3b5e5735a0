"""Concept normalization: free-text spans to knowledge-base concepts.

Candidates come from longest-match lexicon lookup over the span's token
n-grams. Two precision filters follow: a semantic-type filter (keep only
candidates whose lexicon entry carries an allowed type) and a tf-idf
filter that drops candidates whose matched tokens carry less idf weight
than the tokens they failed to match. Tokens are lowercased alphanumeric
runs plus individual punctuation characters, so a span like "covid-19"
contributes three scoring tokens.

A separate lab path keeps only candidates whose concept carries a LOINC
code, mirroring how lab mentions must land on an orderable test.
"""

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


class NoLoincMappingError(LookupError):
    def __init__(self, span: str):
        super().__init__(f"no LOINC-coded concept for span {span!r}")
        self.span = span


def tokenize_phrase(text: str) -> list[str]:
    """Lowercased tokens: alphanumeric runs and single punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class LexiconEntry:
    phrase: str
    cui: str
    semantic_types: frozenset = frozenset()


class Lexicon:
    """Phrase-to-concept table with a token-tuple index for n-gram lookup."""

    def __init__(self, entries: Iterable[LexiconEntry]):
        self.entries = list(entries)
        self._index: dict[tuple, list[LexiconEntry]] = {}
        self.max_phrase_tokens = 1
        for e in self.entries:
            key = tuple(tokenize_phrase(e.phrase))
            if not key:
                continue
            self._index.setdefault(key, []).append(e)
            self.max_phrase_tokens = max(self.max_phrase_tokens, len(key))

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, tokens: tuple) -> list[LexiconEntry]:
        return self._index.get(tokens, [])

    def phrases(self) -> list[tuple]:
        return list(self._index)

    @classmethod
    def from_text(cls, text: str) -> "Lexicon":
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"lexicon line {lineno}: need phrase and cui")
            semtypes = frozenset(filter(None, (s.strip() for s in parts[2].split(",")))) \
                if len(parts) > 2 else frozenset()
            entries.append(LexiconEntry(parts[0].strip(), parts[1].strip(), semtypes))
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


class TermStats:
    """Inverse document frequencies over the lexicon's phrase inventory.

    Each distinct phrase is one document; a token's df is the number of
    phrases containing it at least once. Unknown tokens score ln(total),
    the weight of a token seen in no phrase.
    """

    def __init__(self, document_frequency: dict, total_documents: int):
        self.document_frequency = dict(document_frequency)
        self.total_documents = max(1, total_documents)

    @classmethod
    def from_lexicon(cls, lexicon: Lexicon) -> "TermStats":
        df: dict[str, int] = {}
        phrases = lexicon.phrases()
        for tokens in phrases:
            for tok in set(tokens):
                df[tok] = df.get(tok, 0) + 1
        return cls(df, len(phrases))

    def idf(self, token: str) -> float:
        df = self.document_frequency.get(token, 0)
        if df <= 0:
            return math.log(self.total_documents)
        return math.log(self.total_documents / df)


@dataclass(frozen=True)
class CandidateMatch:
    """One concept candidate for a span.

    matched_token_indices and the remaining indices partition the span's
    token list; the tf-idf sums are over those two index sets.
    """

    cui: str
    matched_token_indices: frozenset
    matched_tfidf: float
    unmatched_tfidf: float
    phrase: str = ""
    semantic_types: frozenset = frozenset()


def tfidf_filter(candidates: list[CandidateMatch], span_tokens: list[str],
                 stats: TermStats) -> list[CandidateMatch]:
    """Keep candidates whose matched idf sum is at least the unmatched sum.

    Ties retain the candidate. span_tokens and stats are accepted for
    interface symmetry; the sums are already carried on each candidate.
    """
    del span_tokens, stats
    return [c for c in candidates if c.matched_tfidf >= c.unmatched_tfidf]


class ConceptNormalizer:
    def __init__(self, lexicon: Lexicon, kb=None, stats: Optional[TermStats] = None):
        self.lexicon = lexicon
        self.kb = kb
        self.stats = stats or TermStats.from_lexicon(lexicon)

    def candidates(self, text: str,
                   allowed_semtypes: Optional[Iterable[str]] = None) -> list[CandidateMatch]:
        """Longest-match candidates with tf-idf sums, before the tf-idf filter."""
        tokens = tokenize_phrase(text)
        allowed = frozenset(allowed_semtypes) if allowed_semtypes else None
        total_idf = [self.stats.idf(t) for t in tokens]
        out: list[CandidateMatch] = []
        i = 0
        while i < len(tokens):
            matched_entries: list[LexiconEntry] = []
            span_len = 0
            for length in range(min(self.lexicon.max_phrase_tokens, len(tokens) - i), 0, -1):
                entries = self.lexicon.lookup(tuple(tokens[i:i + length]))
                if entries:
                    matched_entries = entries
                    span_len = length
                    break
            if not matched_entries:
                i += 1
                continue
            indices = frozenset(range(i, i + span_len))
            matched_sum = sum(total_idf[j] for j in indices)
            unmatched_sum = sum(idf for j, idf in enumerate(total_idf) if j not in indices)
            for e in matched_entries:
                if allowed is not None and not (e.semantic_types & allowed):
                    continue
                out.append(CandidateMatch(e.cui, indices, matched_sum, unmatched_sum,
                                          phrase=e.phrase,
                                          semantic_types=e.semantic_types))
            i += span_len
        return out

    def normalize(self, text: str,
                  allowed_semtypes: Optional[Iterable[str]] = None) -> list[CandidateMatch]:
        """Candidates after both precision filters, best matched_tfidf first."""
        tokens = tokenize_phrase(text)
        kept = tfidf_filter(self.candidates(text, allowed_semtypes), tokens, self.stats)
        return sorted(kept, key=lambda c: (-c.matched_tfidf, c.cui))

    def normalize_lab(self, text: str) -> CandidateMatch:
        """Best candidate whose concept carries a LOINC code.

        Candidates resolving to concepts without any LOINC code are
        excluded even if they outscore coded ones; raises
        NoLoincMappingError when nothing codable remains.
        """
        if self.kb is None:
            raise ValueError("normalize_lab needs a knowledge base")
        for cand in self.normalize(text):
            concept = self.kb.concepts.get(cand.cui)
            if concept is not None and concept.codes_in("LOINC"):
                return cand
        raise NoLoincMappingError(text)
