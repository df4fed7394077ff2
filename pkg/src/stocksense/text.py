"""Tokenization and TF-IDF weighting for tweet text."""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

_URL_RE = re.compile(r"https?://\S+")
_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip URLs, split on non-alphanumeric runs and drop
    tokens shorter than two characters."""
    text = _URL_RE.sub(" ", text.lower())
    return [
        t for t in _SPLIT_RE.split(text)
        if len(t) >= 2 and not t.startswith("http")
    ]


class TfidfVectorizer(BaseEstimator):
    """Bag-of-words TF-IDF over pre-tokenized documents.

    tf(w, d) is the count of w divided by the *full* token count of the
    document (out-of-vocabulary tokens included in the denominator);
    idf(w) = ln(N / df(w)) with no smoothing. Terms with df below
    ``min_df`` are dropped and the vocabulary is truncated to the
    ``max_terms`` highest-df terms, ties broken lexicographically.

    Fitted attributes: ``terms_`` (column order, sorted lexicographically),
    ``vocabulary_`` (term -> column), ``doc_freq_``, ``idf_``, ``n_docs_``.
    """

    def __init__(self, min_df: int = 2, max_terms: int = 5000):
        self.min_df = min_df
        self.max_terms = max_terms

    def fit(self, corpus: Sequence[Sequence[str]]) -> "TfidfVectorizer":
        if len(corpus) == 0:
            raise ValueError("empty corpus")
        df: Counter[str] = Counter()
        for doc in corpus:
            df.update(set(doc))
        kept = [(term, count) for term, count in df.items() if count >= self.min_df]
        # highest df first, lexicographic tie-break, then cap the vocabulary
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[: self.max_terms]
        if not kept:
            raise ValueError("empty vocabulary after df filtering")
        self.terms_ = sorted(term for term, _ in kept)
        self.vocabulary_ = {term: i for i, term in enumerate(self.terms_)}
        counts = dict(kept)
        self.doc_freq_ = np.array([counts[t] for t in self.terms_], dtype=np.int64)
        self.n_docs_ = len(corpus)
        self.idf_ = np.log(self.n_docs_ / self.doc_freq_)
        return self

    def _check_fitted(self):
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("TfidfVectorizer is not fitted")

    def term_frequency(self, tokens: Sequence[str]) -> np.ndarray:
        """Per-vocabulary-term tf vector; empty documents yield zeros."""
        self._check_fitted()
        tf = np.zeros(len(self.terms_), dtype=np.float64)
        if not tokens:
            return tf
        for tok, count in Counter(tokens).items():
            col = self.vocabulary_.get(tok)
            if col is not None:
                tf[col] = count
        tf /= len(tokens)
        return tf

    def vectorize(self, tokens: Sequence[str]) -> np.ndarray:
        """TF-IDF vector for one tokenized document."""
        return self.term_frequency(tokens) * self.idf_

    def transform(self, corpus: Iterable[Sequence[str]]) -> np.ndarray:
        self._check_fitted()
        return np.array([self.vectorize(doc) for doc in corpus], dtype=np.float64).reshape(
            -1, len(self.terms_)
        )

    def fit_transform(self, corpus: Sequence[Sequence[str]]) -> np.ndarray:
        return self.fit(corpus).transform(corpus)

    # -- persistence -------------------------------------------------------

    def get_state(self) -> dict:
        self._check_fitted()
        return {
            "min_df": self.min_df,
            "max_terms": self.max_terms,
            "terms": list(self.terms_),
            "doc_freq": [int(c) for c in self.doc_freq_],
            "n_docs": int(self.n_docs_),
        }

    @classmethod
    def from_state(cls, state: dict) -> "TfidfVectorizer":
        vec = cls(min_df=state["min_df"], max_terms=state["max_terms"])
        vec.terms_ = list(state["terms"])
        vec.vocabulary_ = {t: i for i, t in enumerate(vec.terms_)}
        vec.doc_freq_ = np.array(state["doc_freq"], dtype=np.int64)
        vec.n_docs_ = state["n_docs"]
        vec.idf_ = np.log(vec.n_docs_ / vec.doc_freq_)
        return vec
