"""Registry of model, predictor, loss, and estimator identifiers.

The CLI resolves config names through these tables; each entry carries the
result tag printed by ``easpred list``.
"""

from __future__ import annotations

import numpy as np

from . import harness, losses, models, predictors
from .core import ConfigurationError, Prediction, Predictor


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigurationError(f"key {key!r} must be a boolean, got {raw!r}")


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"key {key!r} must be a number, got {raw!r}") from exc


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"key {key!r} must be an integer, got {raw!r}") from exc


def _parse_vector(raw: str, key: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split()]
    except ValueError as exc:
        raise ConfigurationError(f"key {key!r} must be space-separated numbers") from exc


def _parse_matrix(raw: str, key: str) -> list[list[float]]:
    rows = [r.strip() for r in raw.split(";") if r.strip()]
    return [_parse_vector(r, key) for r in rows]


def _need(params: dict, key: str, prefix: str) -> str:
    if key not in params:
        raise ConfigurationError(f"missing key {prefix}.{key}")
    return params[key]


# ---------------------------------------------------------------------------
# models

def _model_bernoulli(p, prefix):
    rational = _parse_bool(p["rational"], f"{prefix}.rational") if "rational" in p else None
    return models.bernoulli(_parse_float(_need(p, "p", prefix), f"{prefix}.p"), rational)


def _model_threshold(p, prefix):
    return models.threshold_model(
        _parse_float(_need(p, "a", prefix), f"{prefix}.a"),
        _parse_bool(_need(p, "rational", prefix), f"{prefix}.rational"))


MODELS = {
    "bernoulli": ("Lemma C.1", _model_bernoulli),
    "categorical": ("Section 4.1", lambda p, pre: models.categorical(
        _parse_vector(_need(p, "weights", pre), f"{pre}.weights"))),
    "geometric": ("Theorem 5.1", lambda p, pre: models.geometric(
        _parse_float(_need(p, "ratio", pre), f"{pre}.ratio"))),
    "heavy_tail": ("Appendix D", lambda p, pre: models.heavy_tail(
        _parse_float(p.get("exponent", "2.5"), f"{pre}.exponent"),
        _parse_int(p.get("cutoff", "1000000"), f"{pre}.cutoff"))),
    "markov": ("Theorem 4.5", lambda p, pre: models.markov_chain(
        _parse_matrix(_need(p, "rows", pre), f"{pre}.rows"))),
    "bernoulli_matrix": ("Theorem 4.6", lambda p, pre: models.bernoulli_matrix(
        _parse_matrix(_need(p, "mean", pre), f"{pre}.mean"))),
    "matrix_pair": ("Corollary 4.4", lambda p, pre: models.matrix_pair(
        _parse_matrix(_need(p, "mean_a", pre), f"{pre}.mean_a"),
        _parse_matrix(_need(p, "mean_b", pre), f"{pre}.mean_b"))),
    "threshold": ("Theorem 4.3", _model_threshold),
    "uniform01": ("Appendix A", lambda p, pre: models.uniform_unit(
        _parse_int(p.get("target_bit", "1"), f"{pre}.target_bit"))),
    "entropy_param": ("Theorem 4.1", lambda p, pre: models.distribution_with_entropy(
        _parse_float(_need(p, "h", pre), f"{pre}.h"))),
}


# ---------------------------------------------------------------------------
# predictors

def _predictor_insurance(params, model_specs):
    schedule = models.tight_class_schedule(model_specs)
    return lambda: predictors.insurance_predictor(schedule)


def _predictor_boost(params, model_specs):
    success = _parse_float(params.get("success", "0.65"), "predictor.success")
    targets = {m.attributes.property_bits.get("target") for m in model_specs
               if m.attributes.property_bits}
    if len(targets) != 1:
        raise ConfigurationError("boost_scripted needs models with one target bit")
    target = targets.pop()
    from .combinators import boost_majority
    return lambda: boost_majority(
        lambda: harness.ScriptedWeakPredictor(success, target))


def _matrix_dim(model_specs) -> int:
    dims = {m.params.get("d") for m in model_specs if "d" in m.params}
    if len(dims) != 1:
        raise ConfigurationError("matrix predictors need matrix models of one size")
    return dims.pop()


def _base_n(params) -> int:
    return _parse_int(params.get("base_n", "16"), "predictor.base_n")


PREDICTORS = {
    "cover_predictor": ("Lemma C.1", lambda p, ms: (
        lambda: predictors.cover_predictor(
            variance_bound=_parse_float(p.get("variance_bound", "1.0"),
                                        "predictor.variance_bound")))),
    "slln_predictor": ("Appendix D", lambda p, ms: predictors.slln_predictor),
    "entropy_le_predictor": ("Appendix D", lambda p, ms: (
        lambda: predictors.entropy_le_predictor(
            _parse_float(_need(p, "threshold", "predictor"), "predictor.threshold")))),
    "insurance_predictor": ("Theorem 5.1", _predictor_insurance),
    "rational_threshold_online": ("Theorem 4.3", lambda p, ms: (
        lambda: predictors.rational_threshold_online())),
    "functional_singular": ("Corollary 4.1", lambda p, ms: (
        lambda d=_matrix_dim(ms), b=_base_n(p): predictors.singularity_predictor(d, b))),
    "functional_rank": ("Corollary 4.2", lambda p, ms: (
        lambda d=_matrix_dim(ms), b=_base_n(p): predictors.matrix_rank_predictor(d, b))),
    "functional_repeated_eig": ("Corollary 4.3", lambda p, ms: (
        lambda d=_matrix_dim(ms), b=_base_n(p): predictors.repeated_eigenvalue_predictor(d, b))),
    "spectrum_equal": ("Corollary 4.4", lambda p, ms: (
        lambda d=_matrix_dim(ms), b=_base_n(p): predictors.spectrum_equal_predictor(d, b))),
    "boost_scripted": ("Appendix A", _predictor_boost),
    "constant_binary": ("baseline", lambda p, ms: (
        lambda v=_parse_int(_need(p, "value", "predictor"), "predictor.value"):
        _constant_binary(v))),
}


def _constant_binary(v: int) -> Predictor:
    from .core import ConstantPredictor
    return ConstantPredictor(Prediction.binary(v))


COMBINATORS = {
    "back_and_forth": "Lemma 3.1",
    "nested_union": "Lemma 3.2",
    "grid_combinator": "Theorem 2.1",
    "staged_learner_to_predictor": "Theorem 2.3",
    "identify_then_predict": "Theorem 2.4",
    "boost_majority": "Appendix A",
}


# ---------------------------------------------------------------------------
# losses

LOSSES = {
    "irrationality": ("Lemma C.1", lambda p: losses.irrationality_loss()),
    "mean_within": ("Appendix D", lambda p: losses.mean_within_loss(
        _parse_float(_need(p, "epsilon", "loss"), "loss.epsilon"))),
    "threshold_label": ("Theorem 4.3", lambda p: losses.threshold_label_loss()),
    "insurance": ("Theorem 5.1", lambda p: losses.insurance_loss()),
    "entropy_le": ("Appendix D", lambda p: losses.entropy_le_loss(
        _parse_float(_need(p, "threshold", "loss"), "loss.threshold"))),
    "property_bit": ("Theorem 4.6", lambda p: losses.property_bit_loss(
        _need(p, "name", "loss"))),
    "stationary_sup": ("Theorem 4.5", lambda p: losses.stationary_sup_loss(
        _parse_float(_need(p, "epsilon", "loss"), "loss.epsilon"))),
}


# ---------------------------------------------------------------------------
# stopping estimators

ESTIMATORS = {
    "markov_regeneration": ("Theorem 4.5", lambda p: harness.regeneration_estimator(
        _parse_float(_need(p, "epsilon", "estimator"), "estimator.epsilon"),
        _parse_float(_need(p, "eta", "estimator"), "estimator.eta"),
        _parse_float(p.get("cycles_constant", "8"), "estimator.cycles_constant"))),
    "markov_matrix": ("Theorem 4.5", lambda p: harness.matrix_estimator(
        _parse_int(_need(p, "transitions", "estimator"), "estimator.transitions"))),
}


def build_model(params: dict, prefix: str = "model") -> models.ModelSpec:
    kind = _need(params, "kind", prefix)
    if kind not in MODELS:
        raise ConfigurationError(f"unknown model kind {kind!r} at {prefix}.kind")
    rest = {k: v for k, v in params.items() if k != "kind"}
    return MODELS[kind][1](rest, prefix)


def build_predictor(params: dict, model_specs) -> "callable":
    kind = _need(params, "kind", "predictor")
    if kind not in PREDICTORS:
        raise ConfigurationError(f"unknown predictor kind {kind!r} at predictor.kind")
    rest = {k: v for k, v in params.items() if k != "kind"}
    return PREDICTORS[kind][1](rest, model_specs)


def build_loss(params: dict):
    kind = _need(params, "kind", "loss")
    if kind not in LOSSES:
        raise ConfigurationError(f"unknown loss kind {kind!r} at loss.kind")
    rest = {k: v for k, v in params.items() if k != "kind"}
    return LOSSES[kind][1](rest)


def build_estimator(params: dict):
    kind = _need(params, "kind", "estimator")
    if kind not in ESTIMATORS:
        raise ConfigurationError(f"unknown estimator kind {kind!r} at estimator.kind")
    rest = {k: v for k, v in params.items() if k != "kind"}
    return ESTIMATORS[kind][1](rest)


def list_catalog() -> list[tuple[str, str, str]]:
    """(name, category, ref) rows for every registered identifier."""
    rows = []
    for name, (ref, _) in PREDICTORS.items():
        rows.append((name, "predictor", ref))
    rows.append(("markov_stationary_matrix", "estimator", "Theorem 4.5"))
    rows.append(("markov_regeneration", "estimator", "Theorem 4.5"))
    rows.append(("mean_set_classifier", "predictor", "Theorem A.1"))
    rows.append(("entropy_fsigma_predictor", "predictor", "Theorem 4.1"))
    for name, ref in COMBINATORS.items():
        rows.append((name, "combinator", ref))
    for name, (ref, _) in MODELS.items():
        rows.append((name, "model", ref))
    for name, (ref, _) in LOSSES.items():
        rows.append((name, "loss", ref))
    return rows
