"""Edgeworth-corrected approximations for slightly trimmed sums."""

from ._trimsum import (
    ExpansionTerms,
    Model,
    TrimsumError,
    ci,
    expansion_terms,
    fit_rate,
    ks_distance,
    normalize_config,
    plugin_moments,
    psi_sup,
    run,
    terms_from_ratios,
    trimmed_sum,
)

__all__ = [
    "ExpansionTerms",
    "Model",
    "TrimsumError",
    "ci",
    "expansion_terms",
    "fit_rate",
    "ks_distance",
    "normalize_config",
    "plugin_moments",
    "psi_sup",
    "run",
    "terms_from_ratios",
    "trimmed_sum",
]
