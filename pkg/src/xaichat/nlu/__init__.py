from .evaluate import CvResult, cross_validate
from .matcher import (
    COSINE_NEAREST,
    KERNEL_SVM,
    MatchResult,
    Matcher,
    MatcherConfig,
    NoMatch,
    UnmatchedLog,
    build_matcher,
    log_unmatched,
    match,
    train_matcher,
)
from .preprocess import (
    CLASS_TOKEN,
    FEATURE_TOKEN,
    VALUE_TOKEN,
    PreprocessedQuestion,
    Slots,
    substitute_placeholders,
    tokenize_and_stem,
)
from .svm import DegenerateKernelError, OneVsRestSvm, SvmParams, rbf_kernel, smo_solve
from .tfidf import TfidfModel, fit_tfidf

__all__ = [
    "COSINE_NEAREST",
    "KERNEL_SVM",
    "CLASS_TOKEN",
    "FEATURE_TOKEN",
    "VALUE_TOKEN",
    "CvResult",
    "DegenerateKernelError",
    "MatchResult",
    "Matcher",
    "MatcherConfig",
    "NoMatch",
    "OneVsRestSvm",
    "PreprocessedQuestion",
    "Slots",
    "SvmParams",
    "TfidfModel",
    "UnmatchedLog",
    "build_matcher",
    "cross_validate",
    "fit_tfidf",
    "log_unmatched",
    "match",
    "rbf_kernel",
    "smo_solve",
    "substitute_placeholders",
    "tokenize_and_stem",
    "train_matcher",
]
