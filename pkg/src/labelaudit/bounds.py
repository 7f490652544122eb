"""Executable numerical forms of the detectors' worst-case guarantees.

* ``vote_lower_bound``: probability that the majority vote over k+1 noisy
  neighborhood labels identifies an instance correctly, given a noise-rate
  ceiling and the neighborhood label-mismatch rate.
* ``k_breakeven``: the mismatch rate at a larger k above which raising k stops
  paying off.
* ``rank_f1_bound``: worst-case F1 of the rank detector with the ideal
  per-class threshold, plus the Monte-Carlo probability that the bound's
  order-statistic condition holds.

The regularized incomplete beta function at the core of the vote bound is
evaluated by continued fraction (modified Lentz) to absolute error 1e-10.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import as_generator

_CF_TOL = 1e-14
_CF_MAX_ITERS = 400
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function, modified Lentz."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITERS + 1):
        m2 = 2 * m
        # Even step.
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        # Odd step.
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b), the Beta(a, b) CDF."""
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"x must be in [0, 1], got {x}")
    if a <= 0.0 or b <= 0.0:
        raise ConfigError(f"a and b must be positive, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fastest on the side of the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _majority_threshold(k: int) -> int:
    """Largest number of corrupted observations out of k+1 that still leaves
    the true class with a strict majority."""
    return math.ceil((k + 1) / 2) - 1


def _vote_beta(k: int, noise_rate: float) -> float:
    kp = _majority_threshold(k)
    return reg_inc_beta(1.0 - noise_rate, k + 1 - kp, kp + 1)


def vote_lower_bound(k: int, noise_rate: float, mismatch_rate: float) -> float:
    """Lower bound on the probability that majority voting over k+1
    neighborhood labels detects correctly.

    ``noise_rate`` caps the per-instance label-flip probability (must be
    below 1/2); ``mismatch_rate`` is the probability that the neighborhood
    violates shared-class purity at this k.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not 0.0 <= noise_rate < 0.5:
        raise ConfigError(f"noise_rate must be in [0, 0.5), got {noise_rate}")
    if not 0.0 <= mismatch_rate <= 1.0:
        raise ConfigError(f"mismatch_rate must be in [0, 1], got {mismatch_rate}")
    return (1.0 - mismatch_rate) * _vote_beta(k, noise_rate)


def k_breakeven(k1: int, k2: int, noise_rate: float, mismatch_rate_k1: float) -> float:
    """Mismatch rate at k2 above which growing the neighborhood from k1 to k2
    cannot improve the vote lower bound.

    At the returned value the two bounds are exactly equal.
    """
    if not k1 < k2:
        raise ConfigError(f"need k1 < k2, got k1={k1}, k2={k2}")
    if not 0.0 <= mismatch_rate_k1 <= 1.0:
        raise ConfigError(f"mismatch_rate_k1 must be in [0, 1], got {mismatch_rate_k1}")
    ratio = _vote_beta(k1, noise_rate) / _vote_beta(k2, noise_rate)
    return 1.0 - (1.0 - mismatch_rate_k1) * ratio


@dataclass
class RankBound:
    """Worst-case F1 bound for rank detection and the probability it holds."""

    f1_lower: float
    prob: float
    prob_ci_halfwidth: float  # 95% normal-approximation half width
    mc_samples: int

    def to_dict(self) -> dict:
        return {
            "f1_lower": self.f1_lower,
            "prob": self.prob,
            "prob_ci_halfwidth": self.prob_ci_halfwidth,
            "mc_samples": self.mc_samples,
        }


def rank_f1_bound(
    n_corrupted: int,
    n_clean: int,
    alpha: int,
    mean_gap: float,
    band_width: float,
    tail_decay: float,
    *,
    mc_samples: int = 100_000,
    seed=0,
) -> RankBound:
    """Worst-case F1 of rank detection in one noisy class.

    With ``n_corrupted`` truly corrupted and ``n_clean`` truly clean members,
    at most ``alpha`` score misorderings tolerated inside the central band,
    and score tails decaying at rate ``tail_decay``, the F1 with the ideal
    threshold is at least

        1 - (exp(-tail_decay) * max(n_corrupted, n_clean) + alpha) / n_corrupted.

    The bound holds when the top corrupted order statistic stays below the
    (alpha+1)-th clean one; that event's probability is estimated by Monte
    Carlo over the two independent Beta order statistics
    Beta(n_corrupted, 1) and Beta(alpha + 1, n_clean - alpha), as
    P(beta1 - beta2 < mean_gap - band_width).
    """
    if n_corrupted < 1 or n_clean < 1:
        raise ConfigError("n_corrupted and n_clean must be >= 1")
    if alpha < 0 or alpha > n_clean:
        raise ConfigError(f"alpha must be in [0, n_clean], got {alpha}")
    if not -1.0 <= mean_gap <= 1.0:
        raise ConfigError(f"mean_gap must be in [-1, 1], got {mean_gap}")
    if band_width <= 0.0 or tail_decay <= 0.0:
        raise ConfigError("band_width and tail_decay must be positive")
    if mc_samples < 10_000:
        raise ConfigError(f"mc_samples must be >= 10000, got {mc_samples}")

    f1_lower = 1.0 - (math.exp(-tail_decay) * max(n_corrupted, n_clean) + alpha) / n_corrupted

    cutoff = mean_gap - band_width
    if cutoff >= 1.0:
        return RankBound(f1_lower, 1.0, 0.0, 0)
    if cutoff <= -1.0:
        return RankBound(f1_lower, 0.0, 0.0, 0)

    rng = as_generator(seed)
    beta1 = rng.beta(n_corrupted, 1.0, size=mc_samples)
    if alpha == n_clean:
        beta2 = np.ones(mc_samples)  # Beta(a, b -> 0) degenerates to 1
    else:
        beta2 = rng.beta(alpha + 1.0, n_clean - alpha, size=mc_samples)
    hits = float(np.mean(beta1 - beta2 < cutoff))
    if hits in (0.0, 1.0):
        ci = 3.0 / mc_samples  # rule-of-three bound for all-or-nothing samples
    else:
        ci = 1.96 * math.sqrt(hits * (1.0 - hits) / mc_samples)
    return RankBound(f1_lower, hits, ci, mc_samples)
