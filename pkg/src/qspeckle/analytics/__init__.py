from qspeckle.analytics.estimators import (
    FEATURE_FIELDS,
    FeatureVector,
    dimensionality,
    estimate_features,
    purity,
    truncated_vc,
    visibility,
)
from qspeckle.analytics.gof import GofKind, GofReport, goodness_of_fit, ks_distance
from qspeckle.analytics.pdfs import (
    AnalyticPdf,
    Family,
    Normalization,
    pdf_accidental,
    pdf_coincidence_k,
    pdf_g2_distinguishable,
    pdf_g2_indistinguishable,
    pdf_intensity_gamma,
)
from qspeckle.analytics.special import bessel_i, bessel_k

__all__ = [
    "FEATURE_FIELDS",
    "AnalyticPdf",
    "Family",
    "FeatureVector",
    "GofKind",
    "GofReport",
    "Normalization",
    "bessel_i",
    "bessel_k",
    "dimensionality",
    "estimate_features",
    "goodness_of_fit",
    "ks_distance",
    "pdf_accidental",
    "pdf_coincidence_k",
    "pdf_g2_distinguishable",
    "pdf_g2_indistinguishable",
    "pdf_intensity_gamma",
    "purity",
    "truncated_vc",
    "visibility",
]
