"""TF-IDF weighting over stemmed question tokens.

IDF uses the smoothed form ln((1+N)/(1+df)) + 1 and transformed vectors are
L2-normalized, so unseen tokens never divide by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import tokenize_and_stem


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    max_df: float
    min_df: int

    def transform(self, texts: list[str]) -> np.ndarray:
        X = np.zeros((len(texts), len(self.vocabulary)))
        for row, text in enumerate(texts):
            for tok in tokenize_and_stem(text):
                col = self.vocabulary.get(tok)
                if col is not None:
                    X[row, col] += 1.0
        X *= self.idf
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return X / norms


def fit_tfidf(texts: list[str], max_df: float = 1.0, min_df: int = 1) -> TfidfModel:
    if not texts:
        raise ValueError("empty corpus")
    n = len(texts)
    df: dict[str, int] = {}
    for text in texts:
        for tok in set(tokenize_and_stem(text)):
            df[tok] = df.get(tok, 0) + 1
    kept = sorted(tok for tok, count in df.items() if count >= min_df and count <= max_df * n)
    if not kept:
        raise ValueError(
            f"document-frequency bounds (max_df={max_df}, min_df={min_df}) removed every token"
        )
    vocabulary = {tok: i for i, tok in enumerate(kept)}
    idf = np.array([np.log((1 + n) / (1 + df[tok])) + 1.0 for tok in kept])
    return TfidfModel(vocabulary=vocabulary, idf=idf, max_df=max_df, min_df=min_df)
