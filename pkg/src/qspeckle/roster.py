"""The nine reference sources used to train and test the classifier."""

from __future__ import annotations

from qspeckle.analytics import estimate_features
from qspeckle.classifier import StateClass
from qspeckle.interferometer import InterferometerConfig
from qspeckle.measurement import DetectorConfig, run_ensemble
from qspeckle.sources import CW_PUMP_JSA, SourceModel, jsa_gaussian

SPECTRAL_BINS = 7
DISPERSIVE_BINS = 10


def roster_sources() -> dict:
    """``StateClass -> SourceModel``."""
    cw = jsa_gaussian(**CW_PUMP_JSA)
    return {
        StateClass.SINGLE_PHOTON: SourceModel("HeraldedSinglePhoton", (0,)),
        StateClass.TWO_PHOTON_FOCK: SourceModel("TwoPhotonFock", (0,)),
        StateClass.INDIST_BIPHOTON: SourceModel("BiphotonPair", (0, 1), x=1.0),
        StateClass.DIST_BIPHOTON: SourceModel("BiphotonPair", (0, 1), x=0.0),
        StateClass.NOON2: SourceModel("Noon2", (0, 1), dephasing_mode="RmsResidual"),
        StateClass.INCOHERENT_2MODE: SourceModel("IncoherentMixture", (0, 1)),
        StateClass.INDIST_SPECTRAL_BIPHOTON: SourceModel(
            "SpectralBiphoton", (0, 1), x=1.0, n_spectral_bins=SPECTRAL_BINS, jsa=cw),
        StateClass.DIST_SPECTRAL_BIPHOTON: SourceModel(
            "SpectralBiphoton", (0, 1), x=0.0, n_spectral_bins=SPECTRAL_BINS, jsa=cw),
        StateClass.INCOHERENT_DISPERSIVE: SourceModel(
            "IncoherentDispersive", (0, 1), n_spectral_bins=DISPERSIVE_BINS),
    }


def interferometer_for(source: SourceModel, base: InterferometerConfig | None = None) -> InterferometerConfig:
    base = base or InterferometerConfig()
    bins = source.n_spectral_bins if source.is_spectral else 1
    return InterferometerConfig(base.m, base.p, base.n, base.ensemble, bins, base.master_seed)


def ensemble_seed(master_seed: int, class_index: int, ensemble: int) -> int:
    """Distinct, reproducible master seed for one roster ensemble."""
    return int(master_seed) * 1_000_003 + class_index * 100_003 + ensemble


def simulate_roster(detector: DetectorConfig, n_ensembles: int = 200, n_settings: int = 200,
                    master_seed: int = 0, classes=None, workers=None, keep_records=False):
    """Simulate ``n_ensembles`` ensembles per class.

    Returns ``[(StateClass, FeatureVector)]``, or ``[(StateClass, RecordSet)]``
    with ``keep_records``. Features skip the bootstrap.
    """
    sources = roster_sources()
    classes = list(classes or sources)
    out = []
    for ci, label in enumerate(StateClass):
        if label not in classes:
            continue
        src = sources[label]
        icfg = interferometer_for(src)
        for e in range(n_ensembles):
            rs = run_ensemble(src, icfg, detector, n_settings, ensemble_seed(master_seed, ci, e), workers)
            out.append((label, rs if keep_records else estimate_features(rs, n_boot=0, min_records=2)))
    return out
