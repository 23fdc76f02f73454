"""Prediction, loss and trajectory primitives shared by every experiment.

A trajectory is the transcript of the sequential game: at step n the
predictor emits a value based on the first n-1 outcomes, the model then
reveals outcome n, and a {0,1} loss is scored.  Supervised losses depend
only on data and prediction, and their bit is revealed to the predictor;
unsupervised losses may consult hidden model attributes and are never
revealed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid wiring: incompatible predictor/loss/model or bad parameters."""


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


class DegenerateEstimateError(RuntimeError):
    """An estimate is unusable (e.g. singular system); retry with more data."""


class HorizonExhausted(RuntimeError):
    """A stopping rule did not fire within the enforced horizon."""


BINARY = "binary"
NATURAL = "natural"
REAL = "real"
PVECTOR = "pvector"
CLASS = "class"


@dataclass(frozen=True)
class Prediction:
    """Tagged prediction value emitted by a predictor at one step."""

    kind: str
    value: object

    @staticmethod
    def binary(v: int) -> "Prediction":
        if v not in (0, 1):
            raise ValueError(f"binary prediction must be 0 or 1, got {v!r}")
        return Prediction(BINARY, v)

    @staticmethod
    def natural(v: int) -> "Prediction":
        if v < 0 or v != int(v):
            raise ValueError(f"natural prediction must be a nonnegative integer, got {v!r}")
        return Prediction(NATURAL, int(v))

    @staticmethod
    def real(v: float) -> "Prediction":
        return Prediction(REAL, float(v))

    @staticmethod
    def pvector(v) -> "Prediction":
        vec = np.asarray(v, dtype=np.float64)
        if vec.ndim != 1:
            raise ValueError("probability-vector prediction must be 1-dimensional")
        if (vec < -1e-12).any():
            raise ValueError("probability-vector prediction has negative entries")
        if abs(float(vec.sum()) - 1.0) > 1e-9:
            raise ValueError("probability-vector prediction must sum to 1 within 1e-9")
        return Prediction(PVECTOR, vec)

    @staticmethod
    def class_index(v: int) -> "Prediction":
        if v < 0 or v != int(v):
            raise ValueError(f"class index must be a nonnegative integer, got {v!r}")
        return Prediction(CLASS, int(v))


@dataclass
class ModelAttributes:
    """Ground truth of a model, visible to losses but never to predictors."""

    mean: object = None
    entropy_nats: float | None = None
    is_rational: bool | None = None
    stationary: np.ndarray | None = None
    property_bits: dict | None = None


SUPERVISED = "supervised"
UNSUPERVISED = "unsupervised"


@dataclass(frozen=True)
class LossEvaluator:
    """A {0,1} loss.  ``fn(attributes, history, prediction) -> 0 or 1``.

    Supervised evaluators must ignore ``attributes`` entirely; their bit is
    revealed to the predictor after each step.
    """

    name: str
    kind: str
    accepts: frozenset
    fn: Callable[[ModelAttributes, Sequence, Prediction], int]

    def eval(self, attributes: ModelAttributes, history: Sequence, prediction: Prediction) -> int:
        return self.fn(attributes, history, prediction)


class Predictor:
    """Stateful sequential machine: ``predict`` then ``observe``, repeatedly.

    ``observe`` receives the revealed loss bit only in supervised
    experiments.  Subclasses with no internal state may set ``stateless``
    so combinators can skip history replay when instantiating them late.
    """

    stateless = False

    def predict(self) -> Prediction:
        raise NotImplementedError

    def observe(self, outcome, loss_bit: int | None = None) -> None:
        raise NotImplementedError


class ConstantPredictor(Predictor):
    """Always emits the same prediction; useful as a building block."""

    stateless = True

    def __init__(self, prediction: Prediction):
        self._prediction = prediction

    def predict(self) -> Prediction:
        return self._prediction

    def observe(self, outcome, loss_bit=None) -> None:
        pass


@dataclass
class Trajectory:
    """Per-step loss bits of one run, plus the run's horizon and seed."""

    losses: np.ndarray
    horizon: int
    seed: int

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=np.uint8)
        if len(self.losses) != self.horizon:
            raise ValueError("loss sequence length must equal the horizon")


def run_trajectory(model, predictor: Predictor, loss: LossEvaluator,
                   horizon: int, seed: int) -> Trajectory:
    """Play the sequential game for ``horizon`` steps and record losses.

    Deterministic: identical (model, predictor, loss, horizon, seed)
    produce a bit-identical trajectory.
    """
    from .models import sample_stream

    if horizon < 1:
        raise PreconditionError(f"horizon must be >= 1, got {horizon}")
    attributes = model.attributes
    supervised = loss.kind == SUPERVISED
    accepts = loss.accepts
    outcomes = sample_stream(model, seed)
    losses = bytearray(horizon)
    history: list = []
    append = history.append
    predict = predictor.predict
    observe = predictor.observe
    evaluate = loss.fn
    next_outcome = outcomes.__next__
    last_kind = None
    for i in range(horizon):
        y = predict()
        if y.kind is not last_kind:
            if y.kind not in accepts:
                raise ConfigurationError(
                    f"predictor emitted a {y.kind!r} prediction but loss "
                    f"{loss.name!r} accepts {sorted(accepts)}")
            last_kind = y.kind
        x = next_outcome()
        append(x)
        bit = evaluate(attributes, history, y)
        if bit:
            losses[i] = 1
        observe(x, bit if supervised else None)
    return Trajectory(np.frombuffer(bytes(losses), dtype=np.uint8), horizon, seed)


def last_error_time(t: Trajectory) -> int | None:
    """Largest 1-based step with loss 1, or None for an all-zero trajectory."""
    idx = np.flatnonzero(t.losses)
    if len(idx) == 0:
        return None
    return int(idx[-1]) + 1


def cumulative_loss(t: Trajectory, from_step: int = 1) -> int:
    """Count of loss bits at steps >= ``from_step`` (1-based)."""
    if not 1 <= from_step <= t.horizon + 1:
        raise PreconditionError(
            f"from_step must be in [1, horizon+1] = [1, {t.horizon + 1}], got {from_step}")
    return int(t.losses[from_step - 1:].sum())
