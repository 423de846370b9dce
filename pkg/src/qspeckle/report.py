"""Text reports: feature tables, goodness-of-fit tables and the scatter file."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qspeckle.analytics import (
    FEATURE_FIELDS,
    AnalyticPdf,
    Family,
    FeatureVector,
    GofKind,
    Normalization,
    goodness_of_fit,
)
from qspeckle.errors import QSpeckleError
from qspeckle.measurement import RecordSet
from qspeckle.sources import DephasingMode, SourceKind

SCATTER_COLUMNS = ("label", "source", "n_records") + FEATURE_FIELDS


@dataclass(frozen=True)
class Reference:
    """One quantity of the records paired with its expected density."""

    quantity: str
    pdf: AnalyticPdf


def normalized(rs: RecordSet, quantity: str) -> np.ndarray:
    """Samples of ``quantity`` in the variable its reference density uses."""
    if quantity == "I/mean":
        x = rs.I1
    elif quantity == "C/mean":
        x = rs.C
    elif quantity == "(C-R)/mean":
        x = rs.C - rs.R
    elif quantity == "R/mean":
        x = rs.R
    elif quantity == "g2-1":
        return rs.g2[rs.g2_valid] - 1.0
    elif quantity == "g2":
        return rs.g2[rs.g2_valid]
    else:
        raise KeyError(quantity)
    return x / x.mean()


def reference_densities(rs: RecordSet, features: FeatureVector) -> list:
    """Analytic densities worth testing for the source that produced ``rs``.

    Without provenance only the intensity is tested, at ``d = round(d_hat)``.
    The g2 shapes apply to the quantum part ``g2 - 1``; its mean is taken
    from the data.
    """
    src = rs.provenance.source
    if src is None:
        d = max(1, round(features.d_hat)) if math.isfinite(features.d_hat) else 1
        return [Reference("I/mean", AnalyticPdf(Family.INTENSITY_GAMMA, d))]

    kind = src.kind
    refs = [Reference("I/mean", AnalyticPdf(Family.INTENSITY_GAMMA, src.nominal_d))]
    g2_mean = None
    if rs.g2_valid.sum() >= 2:
        q = rs.g2[rs.g2_valid] - 1.0
        g2_mean = float(q.mean()) if q.mean() > 0 else None

    if kind in (SourceKind.HERALDED_SINGLE_PHOTON, SourceKind.INCOHERENT_MIXTURE,
                SourceKind.INCOHERENT_DISPERSIVE):
        refs.append(Reference("R/mean", AnalyticPdf(Family.ACCIDENTAL_PRODUCT, src.nominal_d)))
    elif kind is SourceKind.TWO_PHOTON_FOCK:
        # |t1|^2 |t2|^2 of one input mode: product of two unit exponentials
        refs.append(Reference("(C-R)/mean", AnalyticPdf(Family.ACCIDENTAL_PRODUCT, 1)))
    elif kind is SourceKind.BIPHOTON_PAIR:
        if src.x == 1.0:
            refs.append(Reference("(C-R)/mean", AnalyticPdf(Family.COINCIDENCE_K, 2)))
            if g2_mean:
                refs.append(Reference("g2-1", AnalyticPdf(Family.G2_UNIFORM, mean=g2_mean)))
        elif src.x == 0.0 and g2_mean:
            refs.append(Reference("g2-1", AnalyticPdf(Family.G2_NEGLOG, mean=g2_mean)))
    elif kind is SourceKind.NOON2:
        if src.dephasing_mode is DephasingMode.FULL_AVERAGE and g2_mean:
            refs.append(Reference("g2-1", AnalyticPdf(Family.G2_NEGLOG, mean=g2_mean)))
    elif kind is SourceKind.MIXED_BIPHOTON and src.D_mixture == 1:
        refs.append(Reference("(C-R)/mean", AnalyticPdf(Family.COINCIDENCE_K, 2)))
    return refs


def _note(pdf: AnalyticPdf) -> str:
    if pdf.family is Family.G2_NEGLOG:
        if pdf.normalization_mode is Normalization.EXACT:
            return "prefactor 1/(2 mean); the 1/(pi mean) variant integrates to 2/pi"
        return "prefactor 1/(pi mean) integrates to 2/pi, not 1"
    return ""


def gof_rows(rs: RecordSet, refs) -> list:
    rows = []
    for ref in refs:
        x = normalized(rs, ref.quantity)
        for kind in (GofKind.KS, GofKind.CHI_SQUARE):
            try:
                rep = goodness_of_fit(x, ref.pdf, kind)
            except QSpeckleError as exc:
                rows.append((ref, kind, None, str(exc)))
                continue
            rows.append((ref, kind, rep, _note(ref.pdf)))
    return rows


def format_features(f: FeatureVector) -> str:
    lines = [
        f"# dark_subtracted\t{str(f.dark_subtracted).lower()}",
        f"# accidental_corrected\t{str(f.accidental_corrected).lower()}",
        f"# n_records\t{f.n_records}",
        f"# n_g2_valid\t{f.n_g2_valid}",
        "feature\tvalue\tstd_error\tci95_low\tci95_high",
    ]
    for name in FEATURE_FIELDS:
        value = getattr(f, name)
        se = f.uncertainties.get(name)
        lo, hi = f.intervals.get(name, (None, None))
        cells = [name] + ["na" if v is None else repr(float(v)) for v in (value, se, lo, hi)]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def format_gof(rows) -> str:
    lines = ["quantity\tfamily\td\tmean\ttest\tstatistic\tp_value\tn_samples\tn_bins\tnote"]
    for ref, kind, rep, note in rows:
        pdf = ref.pdf
        d = repr(pdf.d) if pdf.on_half_line else "na"
        mean = "na" if pdf.on_half_line else repr(pdf.mean)
        if rep is None:
            lines.append("\t".join([ref.quantity, pdf.family.value, d, mean, kind.value, "na", "na", "na", "na", note]))
            continue
        lines.append("\t".join([
            ref.quantity, pdf.family.value, d, mean, kind.value,
            repr(rep.statistic), repr(rep.p_value_or_threshold), str(rep.n_samples),
            "na" if rep.n_bins is None else str(rep.n_bins), note,
        ]))
    return "\n".join(lines) + "\n"


def scatter_row(label: str, source: str, f: FeatureVector) -> dict:
    row = {"label": label, "source": source, "n_records": f.n_records}
    for name in FEATURE_FIELDS:
        v = getattr(f, name)
        row[name] = "na" if v is None else repr(float(v))
    return row


def append_scatter(path, row: dict) -> None:
    """Append one feature row, writing the header if the file is new or empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SCATTER_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)


def read_scatter(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
