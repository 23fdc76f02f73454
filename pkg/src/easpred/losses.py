"""Standard loss evaluators used by the bundled experiments."""

from __future__ import annotations

import numpy as np

from .core import (BINARY, NATURAL, PVECTOR, REAL, SUPERVISED, UNSUPERVISED,
                   ConfigurationError, LossEvaluator)


def _require(value, what: str):
    if value is None:
        raise ConfigurationError(f"loss requires model attribute {what!r}, which is unset")
    return value


def irrationality_loss() -> LossEvaluator:
    """Unsupervised: prediction 1 means 'parameter is rational'."""

    def fn(attrs, history, y):
        truth = 1 if _require(attrs.is_rational, "is_rational") else 0
        return 0 if y.value == truth else 1

    return LossEvaluator("irrationality", UNSUPERVISED, frozenset({BINARY}), fn)


def mean_within_loss(epsilon: float) -> LossEvaluator:
    """Unsupervised: loss unless the real prediction is within epsilon of the mean."""
    if epsilon <= 0:
        raise ConfigurationError("mean_within loss needs epsilon > 0")

    def fn(attrs, history, y):
        mu = _require(attrs.mean, "mean")
        return 1 if abs(y.value - mu) >= epsilon else 0

    return LossEvaluator(f"mean_within({epsilon:g})", UNSUPERVISED, frozenset({REAL}), fn)


def threshold_label_loss() -> LossEvaluator:
    """Supervised online game: outcomes are (point, label) pairs and the
    prediction is a threshold; loss when 1{point < threshold} != label."""

    def fn(attrs, history, y):
        u, label = history[-1]
        return 1 if (u < y.value) != bool(label) else 0

    return LossEvaluator("threshold_label", SUPERVISED, frozenset({REAL}), fn)


def insurance_loss() -> LossEvaluator:
    """Supervised: loss when the fresh outcome exceeds the predicted number."""

    def fn(attrs, history, y):
        return 1 if history[-1] > y.value else 0

    return LossEvaluator("insurance", SUPERVISED, frozenset({NATURAL}), fn)


def entropy_le_loss(threshold_nats: float) -> LossEvaluator:
    """Unsupervised: prediction 1 means 'entropy <= threshold'."""
    if threshold_nats <= 0:
        raise ConfigurationError("entropy_le loss needs threshold > 0")

    def fn(attrs, history, y):
        h = _require(attrs.entropy_nats, "entropy_nats")
        truth = 1 if h <= threshold_nats else 0
        return 0 if y.value == truth else 1

    return LossEvaluator(f"entropy_le({threshold_nats:g})", UNSUPERVISED,
                         frozenset({BINARY}), fn)


def entropy_region_loss(region) -> LossEvaluator:
    """Unsupervised: prediction 1 means 'entropy lies in the given region'."""

    def fn(attrs, history, y):
        h = _require(attrs.entropy_nats, "entropy_nats")
        truth = 1 if region.contains(h) else 0
        return 0 if y.value == truth else 1

    return LossEvaluator("entropy_region", UNSUPERVISED, frozenset({BINARY}), fn)


def property_bit_loss(name: str) -> LossEvaluator:
    """Unsupervised: exact match against a named ground-truth property value."""

    def fn(attrs, history, y):
        bits = _require(attrs.property_bits, "property_bits")
        if name not in bits:
            raise ConfigurationError(f"model has no property bit {name!r}")
        return 0 if y.value == bits[name] else 1

    return LossEvaluator(f"property({name})", UNSUPERVISED,
                         frozenset({BINARY, NATURAL}), fn)


def stationary_sup_loss(epsilon: float) -> LossEvaluator:
    """Unsupervised: loss unless the predicted distribution is sup-close
    to the stationary distribution."""
    if epsilon <= 0:
        raise ConfigurationError("stationary_sup loss needs epsilon > 0")

    def fn(attrs, history, y):
        pi = _require(attrs.stationary, "stationary")
        return 1 if float(np.max(np.abs(y.value - pi))) > epsilon else 0

    return LossEvaluator(f"stationary_sup({epsilon:g})", UNSUPERVISED,
                         frozenset({PVECTOR}), fn)
