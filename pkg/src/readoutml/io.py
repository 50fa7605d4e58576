"""On-disk formats for datasets, feature matrices, and fitted models.

Datasets and feature matrices share one layout: a JSON sidecar describing the
payload plus a raw little-endian float64 matrix, row-major, one row per shot,
real block then imaginary block (the classifier vector layout).  Labels live
in a separate byte file referenced by the sidecar.  Fitted models are single
JSON documents, except SVMs, whose support vectors go to a sibling raw
matrix.  Every write lands in a temp file in the target directory and is
renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .cluster import Clustering
from .discriminant import GaussianDiscriminant
from .ensemble import MultiClassModel, Stump
from .errors import DataFormatError
from .features import FeatureMatrix, PcaModel
from .sim import (AmplifierModel, CavityParams, Dataset, DatasetSpec,
                  DecoherenceRates, NoiseModel, TimeGrid)
from .svm import KernelSpec, SvmModel

DATASET_FORMAT = "readoutml-dataset"
FEATURES_FORMAT = "readoutml-features"
MODEL_FORMAT = "readoutml-model"
FORMAT_VERSION = 1

RAW_DTYPE = "<f8"
RAW_LAYOUT = "re-then-im"


# ---------------------------------------------------------------------------
# atomic primitives


def write_bytes(path, data: bytes) -> Path:
    """Write bytes atomically (temp file in the same directory + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_text(path, text: str) -> Path:
    return write_bytes(path, text.encode("utf-8"))


def write_json(path, obj) -> Path:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"missing file {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataFormatError(f"{path}: top-level JSON must be an object")
    return obj


def _require(sidecar: dict, key: str, path):
    if key not in sidecar:
        raise DataFormatError(f"{path}: sidecar is missing {key!r}")
    return sidecar[key]


def _check_format(sidecar: dict, expected: str, path):
    fmt = _require(sidecar, "format", path)
    if fmt != expected:
        raise DataFormatError(f"{path}: format {fmt!r}, expected {expected!r}")
    version = _require(sidecar, "version", path)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")


def _read_matrix(path, n_rows: int, n_cols: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"missing data file {path}")
    expected = n_rows * n_cols * 8
    actual = path.stat().st_size
    if actual != expected:
        raise DataFormatError(
            f"{path}: {actual} bytes, expected {expected} "
            f"({n_rows} x {n_cols} float64)")
    flat = np.fromfile(path, dtype=RAW_DTYPE)
    return flat.reshape(n_rows, n_cols)


def _read_labels(path, n_rows: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"missing labels file {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.shape[0] != n_rows:
        raise DataFormatError(
            f"{path}: {raw.shape[0]} labels, expected {n_rows}")
    return raw.astype(int)


def _data_paths(sidecar_path) -> tuple[Path, Path]:
    sidecar_path = Path(sidecar_path)
    stem = sidecar_path.with_suffix("")
    return stem.with_suffix(".f64"), stem.with_suffix(".labels")


# ---------------------------------------------------------------------------
# dataset sidecar <-> spec dataclasses


def _complex_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _spec_to_json(spec: DatasetSpec) -> dict:
    cavity = spec.cavity
    rates = spec.rates
    amp = spec.amplifier
    return {
        "n_shots": spec.n_shots,
        "grid": {"total_time_s": spec.grid.total_time,
                 "n_points": spec.grid.n_points},
        "cavity": {
            "kappa_rad_s": cavity.kappa,
            "chi_rad_s": cavity.chi,
            "detuning_rad_s": cavity.detuning,
            "drive": [[t, _complex_pair(a)] for t, a in cavity.drive],
        },
        "rates": {
            "t1_time_s": _inf_to_json(rates.t1_time),
            "heating_time_s": _inf_to_json(rates.heating_time),
            "prep_error_ground": rates.prep_error_ground,
            "prep_error_excited": rates.prep_error_excited,
        },
        "amplifier": {
            "kind": amp.kind,
            "added_noise_quanta": amp.added_noise,
            "gain": amp.gain,
            "phase_rad": amp.phase,
        },
        "noise": {"bandwidth_hz": spec.noise.bandwidth},
        "extra_metadata": spec.extra_metadata,
    }


def _inf_to_json(v: float):
    return None if math.isinf(v) else v


def _json_to_inf(v) -> float:
    return math.inf if v is None else float(v)


def _spec_from_json(obj: dict, path) -> DatasetSpec:
    try:
        grid = TimeGrid(total_time=float(obj["grid"]["total_time_s"]),
                        n_points=int(obj["grid"]["n_points"]))
        cav = obj["cavity"]
        cavity = CavityParams(
            kappa=float(cav["kappa_rad_s"]),
            chi=float(cav["chi_rad_s"]),
            detuning=float(cav["detuning_rad_s"]),
            drive=tuple((float(t), complex(re, im))
                        for t, (re, im) in cav["drive"]),
        )
        rates = DecoherenceRates(
            t1_time=_json_to_inf(obj["rates"]["t1_time_s"]),
            heating_time=_json_to_inf(obj["rates"]["heating_time_s"]),
            prep_error_ground=float(obj["rates"]["prep_error_ground"]),
            prep_error_excited=float(obj["rates"]["prep_error_excited"]),
        )
        amp = obj["amplifier"]
        amplifier = AmplifierModel(
            kind=amp["kind"], added_noise=float(amp["added_noise_quanta"]),
            gain=float(amp["gain"]), phase=float(amp["phase_rad"]))
        bw = obj["noise"]["bandwidth_hz"]
        noise = NoiseModel(bandwidth=None if bw is None else float(bw))
        return DatasetSpec(n_shots=int(obj["n_shots"]), grid=grid,
                           cavity=cavity, rates=rates, amplifier=amplifier,
                           noise=noise,
                           extra_metadata=dict(obj.get("extra_metadata", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed spec block: {exc}") from exc


# ---------------------------------------------------------------------------
# datasets


def save_dataset(dataset: Dataset, path) -> Path:
    """Write sidecar JSON at ``path`` plus ``.f64`` and ``.labels`` siblings."""
    path = Path(path)
    data_path, labels_path = _data_paths(path)
    X = np.concatenate([dataset.samples.real, dataset.samples.imag], axis=1)
    write_bytes(data_path, np.ascontiguousarray(X, dtype=RAW_DTYPE).tobytes())
    write_bytes(labels_path,
                np.asarray(dataset.labels, dtype=np.uint8).tobytes())
    sidecar = {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "endianness": "little",
        "dtype": RAW_DTYPE,
        "layout": RAW_LAYOUT,
        "shape": [dataset.n_shots, 2 * dataset.grid.n_points],
        "data_file": data_path.name,
        "labels_file": labels_path.name,
        "labels_dtype": "uint8",
        "seed": dataset.seed,
        "spec": _spec_to_json(dataset.spec),
        "jump_records": [[i, t, int(a), int(b)]
                         for i, events in enumerate(dataset.jump_records)
                         for t, a, b in events],
        "initial_states": [int(s) for s in dataset.initial_states],
        "metadata": dataset.metadata,
    }
    return write_json(path, sidecar)


def load_dataset(path) -> Dataset:
    path = Path(path)
    sidecar = read_json(path)
    _check_format(sidecar, DATASET_FORMAT, path)
    for key, expected in (("dtype", RAW_DTYPE), ("layout", RAW_LAYOUT),
                          ("endianness", "little")):
        if _require(sidecar, key, path) != expected:
            raise DataFormatError(
                f"{path}: {key} {sidecar[key]!r}, expected {expected!r}")
    spec = _spec_from_json(_require(sidecar, "spec", path), path)
    n, width = (int(v) for v in _require(sidecar, "shape", path))
    if n != spec.n_shots or width != 2 * spec.grid.n_points:
        raise DataFormatError(
            f"{path}: shape [{n}, {width}] disagrees with spec "
            f"({spec.n_shots} shots x 2*{spec.grid.n_points})")
    X = _read_matrix(path.parent / _require(sidecar, "data_file", path),
                     n, width)
    if not np.all(np.isfinite(X)):
        raise DataFormatError(f"{path}: non-finite samples")
    labels = _read_labels(
        path.parent / _require(sidecar, "labels_file", path), n)
    if not np.all((labels == 0) | (labels == 1)):
        raise DataFormatError(f"{path}: labels outside {{0, 1}}")

    m = width // 2
    samples = X[:, :m] + 1j * X[:, m:]
    jumps = [() for _ in range(n)]
    for i, t, a, b in _require(sidecar, "jump_records", path):
        if not 0 <= int(i) < n:
            raise DataFormatError(f"{path}: jump record for shot {i}")
        jumps[int(i)] = jumps[int(i)] + ((float(t), int(a), int(b)),)
    initial = np.asarray(_require(sidecar, "initial_states", path), dtype=int)
    if initial.shape != (n,):
        raise DataFormatError(f"{path}: initial_states length mismatch")
    return Dataset(spec=spec, seed=int(_require(sidecar, "seed", path)),
                   samples=samples, labels=labels, jump_records=jumps,
                   initial_states=initial,
                   metadata=dict(sidecar.get("metadata", {})))


# ---------------------------------------------------------------------------
# feature matrices


def save_features(fm: FeatureMatrix, path) -> Path:
    path = Path(path)
    data_path, labels_path = _data_paths(path)
    y = np.asarray(fm.y)
    if np.any((y < 0) | (y > 255)):
        raise DataFormatError("feature labels must fit in a byte")
    write_bytes(data_path,
                np.ascontiguousarray(fm.X, dtype=RAW_DTYPE).tobytes())
    write_bytes(labels_path, y.astype(np.uint8).tobytes())
    sidecar = {
        "format": FEATURES_FORMAT,
        "version": FORMAT_VERSION,
        "endianness": "little",
        "dtype": RAW_DTYPE,
        "layout": RAW_LAYOUT,
        "shape": [fm.n_rows, fm.n_features],
        "data_file": data_path.name,
        "labels_file": labels_path.name,
        "labels_dtype": "uint8",
    }
    return write_json(path, sidecar)


def load_features(path) -> FeatureMatrix:
    path = Path(path)
    sidecar = read_json(path)
    _check_format(sidecar, FEATURES_FORMAT, path)
    n, width = (int(v) for v in _require(sidecar, "shape", path))
    X = _read_matrix(path.parent / _require(sidecar, "data_file", path),
                     n, width)
    y = _read_labels(path.parent / _require(sidecar, "labels_file", path), n)
    return FeatureMatrix(X, y)


# ---------------------------------------------------------------------------
# fitted models (JSON documents)


def _model_doc(kind: str, body: dict) -> dict:
    return {"format": MODEL_FORMAT, "version": FORMAT_VERSION,
            "kind": kind, **body}


def _load_model_doc(path, kind: str) -> dict:
    doc = read_json(path)
    _check_format(doc, MODEL_FORMAT, path)
    if _require(doc, "kind", path) != kind:
        raise DataFormatError(
            f"{path}: model kind {doc['kind']!r}, expected {kind!r}")
    return doc


def save_pca(model: PcaModel, path) -> Path:
    return write_json(path, _model_doc("pca", {
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
        "spectrum": model.spectrum.tolist(),
        "d": model.d,
        "variance_fraction": model.variance_fraction,
    }))


def load_pca(path) -> PcaModel:
    doc = _load_model_doc(path, "pca")
    try:
        return PcaModel(mean=np.array(doc["mean"], dtype=float),
                        components=np.array(doc["components"], dtype=float),
                        eigenvalues=np.array(doc["eigenvalues"], dtype=float),
                        spectrum=np.array(doc["spectrum"], dtype=float),
                        d=int(doc["d"]),
                        variance_fraction=float(doc["variance_fraction"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed pca model: {exc}") from exc


def save_discriminant(model: GaussianDiscriminant, path) -> Path:
    return write_json(path, _model_doc("discriminant", {
        "variant": model.kind,
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
        "priors": model.priors.tolist(),
        "threshold": model.threshold,
        "condition_numbers": list(model.condition_numbers),
        "shrinkage": model.shrinkage,
    }))


def load_discriminant(path) -> GaussianDiscriminant:
    doc = _load_model_doc(path, "discriminant")
    try:
        return GaussianDiscriminant(
            kind=doc["variant"],
            means=np.array(doc["means"], dtype=float),
            covariances=np.array(doc["covariances"], dtype=float),
            priors=np.array(doc["priors"], dtype=float),
            threshold=float(doc["threshold"]),
            condition_numbers=tuple(float(c)
                                    for c in doc["condition_numbers"]),
            shrinkage=float(doc["shrinkage"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(
            f"{path}: malformed discriminant model: {exc}") from exc


def _kernel_to_json(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind, "gamma": kernel.gamma}


def _kernel_from_json(obj: dict) -> KernelSpec:
    gamma = obj.get("gamma")
    return KernelSpec(obj["kind"], None if gamma is None else float(gamma))


def save_svm(model: SvmModel, path) -> Path:
    """JSON document at ``path`` plus raw support vectors at ``.sv.f64``."""
    path = Path(path)
    sv_path = path.parent / (path.stem + ".sv.f64")
    sv = np.ascontiguousarray(model.support_vectors, dtype=RAW_DTYPE)
    write_bytes(sv_path, sv.tobytes())
    return write_json(path, _model_doc("svm", {
        "kernel": _kernel_to_json(model.kernel),
        "C": model.C,
        "support_vectors_file": sv_path.name,
        "support_vectors_shape": list(sv.shape),
        "dual_coef": model.dual_coef.tolist(),
        "bias": model.bias,
        "n_iter": model.n_iter,
        "kkt_gap": model.kkt_gap,
    }))


def load_svm(path) -> SvmModel:
    path = Path(path)
    doc = _load_model_doc(path, "svm")
    try:
        n_sv, p = (int(v) for v in doc["support_vectors_shape"])
        sv = _read_matrix(path.parent / doc["support_vectors_file"], n_sv, p)
        coef = np.array(doc["dual_coef"], dtype=float)
        if coef.shape != (n_sv,):
            raise DataFormatError(
                f"{path}: {coef.shape[0]} dual coefficients for {n_sv} "
                "support vectors")
        return SvmModel(kernel=_kernel_from_json(doc["kernel"]),
                        C=float(doc["C"]), support_vectors=sv,
                        dual_coef=coef, bias=float(doc["bias"]),
                        n_iter=int(doc["n_iter"]),
                        kkt_gap=float(doc["kkt_gap"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed svm model: {exc}") from exc


def save_clustering(clustering: Clustering, path) -> Path:
    return write_json(path, _model_doc("clustering", {
        "k": clustering.k,
        "assignments": clustering.assignments.tolist(),
        "cluster_means": clustering.cluster_means.tolist(),
        "objective": clustering.objective,
        "source_class": clustering.source_class,
        "objective_history": list(clustering.objective_history),
        "n_iter": clustering.n_iter,
    }))


def load_clustering(path) -> Clustering:
    doc = _load_model_doc(path, "clustering")
    try:
        means = np.array(doc["cluster_means"], dtype=float)
        assignments = np.array(doc["assignments"], dtype=int)
        k = int(doc["k"])
        if means.shape[0] != k:
            raise DataFormatError(f"{path}: {means.shape[0]} means for k={k}")
        if assignments.size and not (0 <= assignments.min()
                                     and assignments.max() < k):
            raise DataFormatError(f"{path}: assignment index outside [0, {k})")
        src = doc["source_class"]
        return Clustering(k=k, assignments=assignments, cluster_means=means,
                          objective=float(doc["objective"]),
                          source_class=None if src is None else int(src),
                          objective_history=[float(v) for v in
                                             doc["objective_history"]],
                          n_iter=int(doc["n_iter"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(
            f"{path}: malformed clustering: {exc}") from exc


def save_multiclass(model: MultiClassModel, path) -> Path:
    """Parent JSON; pairwise SVM submodels go to sibling ``.ovrN.json``."""
    path = Path(path)
    body: dict = {"multiclass_kind": model.kind,
                  "classes": model.classes.tolist()}
    if model.kind == "multi_lda":
        body.update(means=model.means.tolist(), chol=model.chol.tolist(),
                    log_priors=model.log_priors.tolist())
    elif model.kind == "multi_svm":
        refs = []
        for i, sub in enumerate(model.submodels):
            sub_path = path.parent / (path.stem + f".ovr{i}.json")
            save_svm(sub, sub_path)
            refs.append(sub_path.name)
        body["submodel_files"] = refs
    elif model.kind == "rusboost":
        body.update(
            stumps=[{"feature": s.feature, "threshold": s.threshold,
                     "class_below": s.class_below, "class_above": s.class_above}
                    for s in model.stumps],
            stump_weights=model.stump_weights.tolist())
    else:
        raise DataFormatError(f"unknown multiclass kind {model.kind!r}")
    return write_json(path, _model_doc("multiclass", body))


def load_multiclass(path) -> MultiClassModel:
    path = Path(path)
    doc = _load_model_doc(path, "multiclass")
    try:
        kind = doc["multiclass_kind"]
        classes = np.array(doc["classes"], dtype=int)
        if kind == "multi_lda":
            return MultiClassModel(
                kind=kind, classes=classes,
                means=np.array(doc["means"], dtype=float),
                chol=np.array(doc["chol"], dtype=float),
                log_priors=np.array(doc["log_priors"], dtype=float))
        if kind == "multi_svm":
            subs = [load_svm(path.parent / name)
                    for name in doc["submodel_files"]]
            return MultiClassModel(kind=kind, classes=classes, submodels=subs)
        if kind == "rusboost":
            stumps = [Stump(feature=int(s["feature"]),
                            threshold=float(s["threshold"]),
                            class_below=int(s["class_below"]),
                            class_above=int(s["class_above"]))
                      for s in doc["stumps"]]
            return MultiClassModel(
                kind=kind, classes=classes, stumps=stumps,
                stump_weights=np.array(doc["stump_weights"], dtype=float))
        raise DataFormatError(f"{path}: unknown multiclass kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(
            f"{path}: malformed multiclass model: {exc}") from exc
