"""Nearest-centroid state classification in (log V_I, log V_g2, mean g2) space.

A rule layer runs first: an ensemble whose mean g2 sits at the accidental
floor (``|mean_g2 - 1| < band``) carries no genuine pair coincidences and is
assigned by its mode count alone. Everything else goes to the Mahalanobis
nearest centroid.
"""

from __future__ import annotations

import configparser
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from qspeckle.errors import SchemaError, TrainingError, ValidationError

MODEL_VERSION = 1
VISIBILITY_FLOOR = 1e-12
COVARIANCE_EPS = 1e-6


class StateClass(str, enum.Enum):
    SINGLE_PHOTON = "SinglePhoton"
    TWO_PHOTON_FOCK = "TwoPhotonFock"
    INDIST_BIPHOTON = "IndistBiphoton"
    DIST_BIPHOTON = "DistBiphoton"
    NOON2 = "Noon2"
    INCOHERENT_2MODE = "Incoherent2Mode"
    INDIST_SPECTRAL_BIPHOTON = "IndistSpectralBiphoton"
    DIST_SPECTRAL_BIPHOTON = "DistSpectralBiphoton"
    INCOHERENT_DISPERSIVE = "IncoherentDispersive"


# classes reachable from the unity-g2 rule, with their nominal mode counts
INCOHERENT_MODE_COUNTS = {
    StateClass.INCOHERENT_2MODE: 2.0,
    StateClass.INCOHERENT_DISPERSIVE: 20.0,
}


def feature_point(f) -> np.ndarray:
    """Map a FeatureVector to ``(log V_I, log V_g2, mean_g2)``."""
    if f.V_g2 is None or f.mean_g2 is None:
        raise ValidationError("V_g2", "feature vector has no valid g2 statistics")
    return np.array([
        math.log(max(f.V_I, VISIBILITY_FLOOR)),
        math.log(max(f.V_g2, VISIBILITY_FLOOR)),
        float(f.mean_g2),
    ])


@dataclass
class ClassifierModel:
    centroids: dict = field(default_factory=dict)
    covariances: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    degenerate: set = field(default_factory=set)
    g2_unity_band: float = 0.05
    version: int = MODEL_VERSION

    @property
    def labels(self) -> list:
        return list(self.centroids)

    def _precisions(self):
        cached = getattr(self, "_prec_cache", None)
        if cached is None or cached[0] is not self.covariances:
            prec = {k: np.linalg.inv(c) for k, c in self.covariances.items()}
            cached = (self.covariances, prec)
            self._prec_cache = cached
        return cached[1]

    def squared_distances(self, point) -> dict:
        point = np.asarray(point, dtype=float)
        prec = self._precisions()
        out = {}
        for label, mu in self.centroids.items():
            diff = point - mu
            out[label] = float(diff @ prec[label] @ diff)
        return out


def fit_points(labels, points, g2_unity_band=0.05, min_per_class=5, required=None) -> ClassifierModel:
    """Fit centroids and covariances directly in feature space."""
    labels = [StateClass(l) for l in labels]
    points = np.asarray(points, dtype=float)
    if len(labels) != len(points):
        raise TrainingError("labels and points differ in length")
    groups = {}
    for label, x in zip(labels, points):
        groups.setdefault(label, []).append(x)
    for label in required or ():
        label = StateClass(label)
        if label not in groups:
            raise TrainingError(f"no training data for class {label.value}")
    model = ClassifierModel(g2_unity_band=g2_unity_band)
    for label, xs in groups.items():
        xs = np.array(xs)
        if len(xs) < min_per_class:
            raise TrainingError(
                f"class {label.value} has {len(xs)} feature vectors, at least {min_per_class} required"
            )
        cov = np.atleast_2d(np.cov(xs, rowvar=False))
        if np.linalg.matrix_rank(cov, tol=1e-12) < cov.shape[0]:
            model.degenerate.add(label)
        model.centroids[label] = xs.mean(axis=0)
        model.covariances[label] = cov + COVARIANCE_EPS * np.eye(cov.shape[0])
        model.counts[label] = len(xs)
    return model


def fit_model(labeled, g2_unity_band=0.05, min_per_class=5, required=None) -> ClassifierModel:
    """Train on ``(StateClass, FeatureVector)`` pairs."""
    labeled = list(labeled)
    if not labeled:
        raise TrainingError("empty training set")
    labels = [l for l, _ in labeled]
    points = [feature_point(f) for _, f in labeled]
    return fit_points(labels, points, g2_unity_band, min_per_class, required)


def decision_rules(f, band: float = 0.05):
    """Unity-g2 rule; returns a StateClass or ``None`` to defer."""
    if f.mean_g2 is None or not abs(f.mean_g2 - 1.0) < band:
        return None
    if f.d_hat < 1.5:
        return StateClass.SINGLE_PHOTON
    return min(INCOHERENT_MODE_COUNTS, key=lambda k: abs(INCOHERENT_MODE_COUNTS[k] - f.d_hat))


def classify_point(point, model: ClassifierModel):
    if not model.centroids:
        raise TrainingError("classifier model is untrained")
    d2 = model.squared_distances(point)
    labels = list(d2)
    values = np.array([d2[k] for k in labels])
    best = int(np.argmin(values))
    weights = np.exp(-0.5 * (values - values[best]))
    return labels[best], float(weights[best] / weights.sum())


def classify(f, model: ClassifierModel):
    """``(StateClass, score)``; rule hits score 1."""
    if not model.centroids:
        raise TrainingError("classifier model is untrained")
    rule = decision_rules(f, model.g2_unity_band)
    if rule is not None:
        return rule, 1.0
    return classify_point(feature_point(f), model)


def cross_validate(labeled, folds: int = 5, seed: int = 0, **fit_kwargs):
    """Stratified k-fold accuracy and the list of ``(true, predicted)`` pairs."""
    labeled = list(labeled)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labeled), dtype=int)
    by_label = {}
    for i, (label, _) in enumerate(labeled):
        by_label.setdefault(StateClass(label), []).append(i)
    for idx in by_label.values():
        idx = rng.permutation(idx)
        fold_of[idx] = np.arange(len(idx)) % folds
    pairs = []
    for k in range(folds):
        train = [labeled[i] for i in range(len(labeled)) if fold_of[i] != k]
        model = fit_model(train, **fit_kwargs)
        for i in np.nonzero(fold_of == k)[0]:
            truth, f = labeled[i]
            pairs.append((StateClass(truth), classify(f, model)[0]))
    accuracy = sum(t == p for t, p in pairs) / len(pairs)
    return accuracy, pairs


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in np.ravel(values))


def dumps_model(model: ClassifierModel) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["model"] = {
        "version": str(model.version),
        "g2_unity_band": repr(model.g2_unity_band),
        "features": "log_V_I, log_V_g2, mean_g2",
        "labels": ", ".join(l.value for l in model.centroids),
    }
    for label, mu in model.centroids.items():
        cp[f"class {label.value}"] = {
            "count": str(model.counts.get(label, 0)),
            "degenerate": str(label in model.degenerate).lower(),
            "centroid": _fmt(mu),
            "covariance": _fmt(model.covariances[label]),
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads_model(text: str) -> ClassifierModel:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
        head = cp["model"]
        version = int(head["version"])
        if version != MODEL_VERSION:
            raise SchemaError(f"unsupported model version {version}")
        model = ClassifierModel(g2_unity_band=float(head["g2_unity_band"]), version=version)
        for name in (s.strip() for s in head["labels"].split(",") if s.strip()):
            label = StateClass(name)
            sec = cp[f"class {name}"]
            mu = np.array([float(v) for v in sec["centroid"].split(",")])
            cov = np.array([float(v) for v in sec["covariance"].split(",")]).reshape(len(mu), len(mu))
            model.centroids[label] = mu
            model.covariances[label] = cov
            model.counts[label] = int(sec["count"])
            if sec["degenerate"] == "true":
                model.degenerate.add(label)
    except SchemaError:
        raise
    except (configparser.Error, KeyError, ValueError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from exc
    return model


def save_model(model: ClassifierModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> ClassifierModel:
    with open(path) as fh:
        return loads_model(fh.read())
