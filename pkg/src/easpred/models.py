"""Seeded sample-stream generators with ground-truth attributes.

Every model is a ``ModelSpec``: a named sampler plus the attributes a loss
may consult (mean, entropy, rationality flag, stationary distribution,
property bits).  Streams are pure functions of (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .core import ConfigurationError, ModelAttributes
from .rng import SplitMix64

_BLOCK = 4096


@dataclass
class ModelSpec:
    kind: str
    params: dict
    attributes: ModelAttributes = field(default_factory=ModelAttributes)


# ---------------------------------------------------------------------------
# constructors

def bernoulli(p, is_rational: bool | None = None) -> ModelSpec:
    """Bernoulli(p) bit stream.  ``p`` may be a Fraction (rational by
    construction) or a float literal with an explicit rationality flag."""
    if isinstance(p, Fraction):
        if is_rational is None:
            is_rational = True
        value = float(p)
    else:
        value = float(p)
    if not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"bernoulli parameter must be in [0, 1], got {value}")
    attrs = ModelAttributes(mean=value, is_rational=is_rational,
                            entropy_nats=_binary_entropy(value))
    return ModelSpec("bernoulli", {"p": value}, attrs)


def categorical(weights: Sequence[float]) -> ModelSpec:
    """Distribution over {0..k-1} with the given weights."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0 or (w < 0).any():
        raise ConfigurationError("categorical weights must be a nonnegative vector")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-9:
        raise ConfigurationError("categorical weights must sum to 1 within 1e-9")
    w = w / total
    mean = float(np.dot(np.arange(len(w)), w))
    attrs = ModelAttributes(mean=mean, entropy_nats=_entropy(w))
    return ModelSpec("categorical", {"weights": w}, attrs)


def geometric(ratio: float) -> ModelSpec:
    """p(X = j) = (1 - r) * r^(j-1) on j >= 1; tail p(X >= n) = r^(n-1)."""
    if not 0.0 < ratio < 1.0:
        raise ConfigurationError("geometric ratio must be in (0, 1)")
    attrs = ModelAttributes(mean=1.0 / (1.0 - ratio))
    return ModelSpec("geometric", {"ratio": ratio}, attrs)


def heavy_tail(exponent: float = 2.5, cutoff: int = 10**6) -> ModelSpec:
    """Power law p(X = j) proportional to j^-exponent on 1 <= j <= cutoff.

    The renormalized mean is stored exactly; higher moments are huge or
    effectively absent, which is the point of the model.
    """
    if exponent <= 2.0:
        raise ConfigurationError("heavy_tail needs exponent > 2 for a finite mean")
    j = np.arange(1, cutoff + 1, dtype=np.float64)
    w = j ** (-exponent)
    w /= w.sum()
    mean = float(np.dot(j, w))
    attrs = ModelAttributes(mean=mean, entropy_nats=_entropy(w))
    return ModelSpec("heavy_tail", {"weights": w, "exponent": exponent, "offset": 1}, attrs)


def markov_chain(transition: Sequence[Sequence[float]]) -> ModelSpec:
    """Irreducible finite Markov chain started from its stationary law."""
    P = np.asarray(transition, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ConfigurationError("transition matrix must be square")
    if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-9:
        raise ConfigurationError("transition matrix rows must be distributions")
    pi = stationary_distribution(P)
    attrs = ModelAttributes(stationary=pi)
    return ModelSpec("markov", {"transition": P}, attrs)


def bernoulli_matrix(mean: Sequence[Sequence[float]],
                     property_bits: dict | None = None) -> ModelSpec:
    """Stream of 0/1 matrices with independent Bernoulli entries.

    Outcomes are flat row-major entry lists of length d*d.  Ground-truth
    matrix properties come from the exact mean matrix unless overridden.
    """
    M = np.asarray(mean, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigurationError("mean matrix must be square")
    if (M < 0).any() or (M > 1).any():
        raise ConfigurationError("mean matrix entries must be Bernoulli means in [0, 1]")
    bits = dict(property_bits) if property_bits else {}
    bits.setdefault("singular", 1 if _exact_det_zero(M) else 0)
    bits.setdefault("rank", int(np.linalg.matrix_rank(M, tol=1e-12)))
    bits.setdefault("repeated_eigenvalue", 1 if _has_repeated_eigenvalue(M) else 0)
    attrs = ModelAttributes(mean=M, property_bits=bits)
    return ModelSpec("bernoulli_matrix", {"mean": M, "d": M.shape[0]}, attrs)


def matrix_pair(mean_a, mean_b) -> ModelSpec:
    """Two synchronized Bernoulli matrix streams, emitted as tuple pairs."""
    A = bernoulli_matrix(mean_a)
    B = bernoulli_matrix(mean_b)
    same = np.allclose(np.sort_complex(np.linalg.eigvals(A.params["mean"])),
                       np.sort_complex(np.linalg.eigvals(B.params["mean"])), atol=1e-12)
    attrs = ModelAttributes(property_bits={"same_spectrum": 1 if same else 0})
    return ModelSpec("matrix_pair",
                     {"mean_a": A.params["mean"], "mean_b": B.params["mean"],
                      "d": A.params["d"]}, attrs)


def threshold_model(a: float, is_rational: bool) -> ModelSpec:
    """Uniform points on [0, 1) labeled by 1{point < a}; outcomes are
    (point, label) pairs."""
    if not 0.0 <= a <= 1.0:
        raise ConfigurationError("threshold parameter must be in [0, 1]")
    attrs = ModelAttributes(mean=float(a), is_rational=is_rational)
    return ModelSpec("threshold", {"a": float(a)}, attrs)


def uniform_unit(target_bit: int = 1) -> ModelSpec:
    """Uniform floats on [0, 1) with a ground-truth target bit attached;
    the driver for scripted classification experiments."""
    attrs = ModelAttributes(mean=0.5, property_bits={"target": int(target_bit)})
    return ModelSpec("uniform01", {}, attrs)


def distribution_with_entropy(h_nats: float) -> ModelSpec:
    """The unique member of the entropy-parameterized family with H = h.

    For ln(k-1) < h <= ln k the distribution is
    (1 - eps) * Uniform{0..k-2} + eps * point mass at k-1 with eps in
    (0, 1/k] solved by bisection on the exact entropy.
    """
    if h_nats <= 0:
        raise ConfigurationError("target entropy must be > 0")
    k = 2
    while math.log(k) < h_nats - 1e-15:
        k += 1

    def entropy_at(eps: float) -> float:
        return _entropy(_entropy_family_weights(k, eps))

    lo, hi = 1e-300, 1.0 / k
    if entropy_at(hi) < h_nats - 1e-12:
        raise ConfigurationError("entropy target exceeds the family range at this k")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if entropy_at(mid) < h_nats:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 and abs(entropy_at(hi) - h_nats) <= 1e-10:
            break
    eps = hi
    w = _entropy_family_weights(k, eps)
    spec = categorical(w)
    spec.attributes.entropy_nats = h_nats
    spec.params["epsilon"] = eps
    spec.params["k"] = k
    return spec


def _entropy_family_weights(k: int, eps: float) -> np.ndarray:
    w = np.full(k, (1.0 - eps) / (k - 1))
    w[k - 1] = eps
    return w


# ---------------------------------------------------------------------------
# attribute helpers

def _entropy(w: np.ndarray) -> float:
    nz = w[w > 0]
    return float(-(nz * np.log(nz)).sum())


def _binary_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def _exact_det_zero(M: np.ndarray) -> bool:
    return abs(float(np.linalg.det(M))) < 1e-12


def _has_repeated_eigenvalue(M: np.ndarray) -> bool:
    ev = np.sort_complex(np.linalg.eigvals(M))
    return bool((np.abs(np.diff(ev)) < 1e-9).any())


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary law of an irreducible chain, solved to 1e-10."""
    n = P.shape[0]
    A = (np.eye(n) - P.T).copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError("chain has no unique stationary law") from exc
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.max(np.abs(pi @ P - pi)) > 1e-10:
        raise ConfigurationError("chain has no stationary law solvable to 1e-10")
    return pi


def stationary_fixed_point(P: np.ndarray, tol: float = 1e-12,
                           max_iter: int = 1_000_000) -> np.ndarray:
    """Brute-force oracle: iterate pi -> pi P until the fixed point.

    Converges geometrically for irreducible aperiodic chains; periodic
    chains should be checked against their closed-form law instead.
    """
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt / nxt.sum()
        pi = nxt
    raise ConfigurationError("fixed-point iteration did not converge; chain periodic?")


# ---------------------------------------------------------------------------
# sampling

def sample_stream(spec: ModelSpec, seed: int) -> Iterator:
    """Infinite outcome iterator, reproducible from the seed."""
    kind = spec.kind
    if kind == "bernoulli":
        return _bernoulli_stream(spec.params["p"], seed)
    if kind in ("categorical", "heavy_tail"):
        return _categorical_stream(spec.params["weights"], seed,
                                   spec.params.get("offset", 0))
    if kind == "geometric":
        return _geometric_stream(spec.params["ratio"], seed)
    if kind == "markov":
        return _markov_stream(spec.params["transition"], spec.attributes.stationary, seed)
    if kind == "bernoulli_matrix":
        return _matrix_stream(spec.params["mean"], seed)
    if kind == "matrix_pair":
        return _matrix_pair_stream(spec.params["mean_a"], spec.params["mean_b"], seed)
    if kind == "threshold":
        return _threshold_stream(spec.params["a"], seed)
    if kind == "uniform01":
        return _uniform_stream(seed)
    raise ConfigurationError(f"unknown model kind {spec.kind!r}")


def _bernoulli_stream(p, seed):
    rng = SplitMix64(seed)
    while True:
        yield from (rng.float_block(_BLOCK) < p).astype(np.int64).tolist()


def _uniform_stream(seed):
    rng = SplitMix64(seed)
    while True:
        yield from rng.float_block(_BLOCK).tolist()


def _categorical_stream(weights, seed, offset=0):
    rng = SplitMix64(seed)
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    while True:
        u = rng.float_block(_BLOCK)
        idx = np.searchsorted(cum, u, side="right")
        if offset:
            idx += offset
        yield from idx.tolist()


def _geometric_stream(ratio, seed):
    rng = SplitMix64(seed)
    log_r = math.log(ratio)
    while True:
        u = rng.float_block(_BLOCK)
        j = np.floor(np.log1p(-u) / log_r).astype(np.int64) + 1
        yield from j.tolist()


def _markov_stream(P, pi, seed):
    rng = SplitMix64(seed)
    cum_rows = [row.tolist() for row in np.cumsum(P, axis=1)]
    n = len(cum_rows)
    start_cum = np.cumsum(pi)
    state = int(np.searchsorted(start_cum, rng.next_float(), side="right"))
    state = min(state, n - 1)
    yield state
    while True:
        block = rng.float_block(_BLOCK).tolist()
        out = []
        append = out.append
        for u in block:
            row = cum_rows[state]
            s = 0
            while row[s] <= u:
                s += 1
            state = s
            append(s)
        yield from out


def _matrix_stream(M, seed):
    rng = SplitMix64(seed)
    flat = M.reshape(-1)
    d2 = len(flat)
    while True:
        u = rng.float_block(_BLOCK * d2).reshape(_BLOCK, d2)
        yield from (u < flat).astype(np.int64).tolist()


def _matrix_pair_stream(A, B, seed):
    rng = SplitMix64(seed)
    flat = np.concatenate([A.reshape(-1), B.reshape(-1)])
    d2 = A.size
    while True:
        u = rng.float_block(_BLOCK * 2 * d2).reshape(_BLOCK, 2 * d2)
        for row in (u < flat).astype(np.int64).tolist():
            yield (row[:d2], row[d2:])


def _threshold_stream(a, seed):
    rng = SplitMix64(seed)
    while True:
        u = rng.float_block(_BLOCK)
        labels = (u < a).astype(np.int64)
        yield from zip(u.tolist(), labels.tolist())


# ---------------------------------------------------------------------------
# tails and quantile schedules

def tail_function(spec: ModelSpec):
    """Returns t(n) = p(X >= n) for discrete models over the naturals."""
    kind = spec.kind
    if kind == "bernoulli":
        p = spec.params["p"]
        return lambda n: 1.0 if n <= 0 else (p if n == 1 else 0.0)
    if kind in ("categorical", "heavy_tail"):
        w = spec.params["weights"]
        offset = spec.params.get("offset", 0)
        # suffix[i] = p(X >= offset + i) with support on {offset..offset+len-1}
        suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])

        def tail(n: int) -> float:
            i = n - offset
            if i <= 0:
                return 1.0
            if i >= len(w):
                return 0.0
            return float(suffix[i])

        return tail
    if kind == "geometric":
        r = spec.params["ratio"]
        return lambda n: 1.0 if n <= 1 else float(r ** (n - 1))
    raise ConfigurationError(f"model kind {spec.kind!r} has no computable tail")


def tight_class_schedule(specs: Sequence[ModelSpec], max_support: int = 10**7):
    """Schedule n_k = smallest n with sup tail p(X >= n) <= 2^-k over the family."""
    from .predictors import QuantileSchedule

    tails = [tail_function(s) for s in specs]

    def level(k: int) -> int:
        target = 2.0 ** (-k)
        n = 1
        while max(t(n) for t in tails) > target:
            n += 1
            if n > max_support:
                raise ConfigurationError(
                    "family tail does not vanish within the support cap; not tight")
        return n

    return QuantileSchedule(level)
