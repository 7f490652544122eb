"""Noise-model estimation from neighborhood label-consensus statistics.

The estimator never sees clean labels. It counts how often noisy labels agree
within tight neighborhoods: the empirical frequencies of single labels, of
(point, 1st-neighbor) label pairs, and of (point, 1st, 2nd-neighbor) label
triples. When neighbors share their clean class, those frequencies are exact
polynomials in the clean prior ``p`` and the transition matrix ``T``:

    singles[i]      = sum_c p[c] T[c,i]
    pairs[i,j]      = sum_c p[c] T[c,i] T[c,j]
    triples[i,j,l]  = sum_c p[c] T[c,i] T[c,j] T[c,l]

Fitting (p, T) is squared-error moment matching, minimized by projected
gradient descent on the product of probability simplexes, best of several
random restarts.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .knn import KnnIndex
from .rng import as_generator


@dataclass
class NoiseModel:
    """Clean-label prior, label-corruption transition matrix, and the observed
    noisy-label marginal.

    ``transition[i, j]`` is the probability that a clean class-``i`` instance
    carries noisy label ``j``. ``noisy_marginal`` is counted directly from the
    data, not derived from ``prior`` and ``transition``.
    """

    prior: np.ndarray          # (K,)
    transition: np.ndarray     # (K, K), rows sum to 1
    noisy_marginal: np.ndarray  # (K,)

    def __post_init__(self):
        self.prior = np.asarray(self.prior, dtype=np.float64)
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.noisy_marginal = np.asarray(self.noisy_marginal, dtype=np.float64)
        k = self.prior.shape[0]
        if self.transition.shape != (k, k) or self.noisy_marginal.shape != (k,):
            raise DataError("noise model shapes are inconsistent")
        for name, arr, axis in (
            ("prior", self.prior, None),
            ("transition rows", self.transition, 1),
            ("noisy_marginal", self.noisy_marginal, None),
        ):
            if arr.min() < -1e-9:
                raise DataError(f"noise model {name} has negative entries")
            sums = arr.sum(axis=axis)
            if not np.allclose(sums, 1.0, atol=1e-6):
                raise DataError(f"noise model {name} must sum to 1, got {sums}")

    @property
    def n_classes(self) -> int:
        return self.prior.shape[0]

    def to_dict(self) -> dict:
        return {
            "prior": self.prior.tolist(),
            "transition": self.transition.tolist(),
            "noisy_marginal": self.noisy_marginal.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(
            prior=np.asarray(d["prior"], dtype=np.float64),
            transition=np.asarray(d["transition"], dtype=np.float64),
            noisy_marginal=np.asarray(d["noisy_marginal"], dtype=np.float64),
        )

    def __eq__(self, other):
        if not isinstance(other, NoiseModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass
class ConsensusStats:
    """Empirical label-agreement frequencies over neighborhood tuples.

    Each array sums to 1: ``singles`` over labels, ``pairs`` over
    (self, 1st-neighbor) label pairs, ``triples`` over
    (self, 1st-neighbor, 2nd-neighbor) label triples.
    """

    singles: np.ndarray   # (K,)
    pairs: np.ndarray     # (K, K)
    triples: np.ndarray   # (K, K, K)

    @property
    def n_classes(self) -> int:
        return self.singles.shape[0]


def consensus_stats(index: KnnIndex, noisy_labels, n_classes: int | None = None) -> ConsensusStats:
    """Count (self, 1st-NN, 2nd-NN) noisy-label tuples over every point.

    Uses each point's top two neighbors only, so the counts are deterministic
    for a fixed index. Requires the index to hold at least 2 neighbors.
    """
    if index.k < 2:
        raise ConfigError(f"consensus statistics need k >= 2 neighbors, index has k={index.k}")
    labels = np.asarray(noisy_labels, dtype=np.int64)
    n = index.n_points
    if labels.shape != (n,):
        raise DataError(f"labels have shape {labels.shape}, expected ({n},)")
    k_classes = int(labels.max()) + 1 if n_classes is None else int(n_classes)
    if labels.min() < 0 or labels.max() >= k_classes:
        raise DataError("label outside [0, n_classes)")

    first = labels[index.neighbor_ids[:, 0]]
    second = labels[index.neighbor_ids[:, 1]]
    singles = np.bincount(labels, minlength=k_classes).astype(np.float64)
    flat_pairs = labels * k_classes + first
    pairs = np.bincount(flat_pairs, minlength=k_classes**2).astype(np.float64)
    flat_triples = flat_pairs * k_classes + second
    triples = np.bincount(flat_triples, minlength=k_classes**3).astype(np.float64)
    return ConsensusStats(
        singles=singles / n,
        pairs=pairs.reshape(k_classes, k_classes) / n,
        triples=triples.reshape(k_classes, k_classes, k_classes) / n,
    )


def predicted_moments(prior: np.ndarray, transition: np.ndarray):
    """Consensus frequencies implied by (prior, transition) under shared-class
    neighborhoods."""
    singles = np.einsum("c,ci->i", prior, transition)
    pairs = np.einsum("c,ci,cj->ij", prior, transition, transition)
    triples = np.einsum("c,ci,cj,cl->ijl", prior, transition, transition, transition)
    return singles, pairs, triples


def moment_objective(
    prior: np.ndarray,
    transition: np.ndarray,
    stats: ConsensusStats,
    weights=(1.0, 1.0, 1.0),
) -> float:
    """Weighted squared moment mismatch between (prior, transition) and the
    observed consensus statistics."""
    m1, m2, m3 = predicted_moments(prior, transition)
    w1, w2, w3 = weights
    return float(
        w1 * np.sum((m1 - stats.singles) ** 2)
        + w2 * np.sum((m2 - stats.pairs) ** 2)
        + w3 * np.sum((m3 - stats.triples) ** 2)
    )


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    Sort-based algorithm; preserves the ordering of coordinates.
    """
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u + (1.0 - css) / idx > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + theta, 0.0)


def _residuals(prior, transition, stats, weights):
    """Weighted moment residual vector, flattened; objective = sum of squares."""
    w1, w2, w3 = weights
    m1, m2, m3 = predicted_moments(prior, transition)
    return np.concatenate(
        [
            np.sqrt(w1) * (m1 - stats.singles),
            np.sqrt(w2) * (m2 - stats.pairs).ravel(),
            np.sqrt(w3) * (m3 - stats.triples).ravel(),
        ]
    )


def _gradients(prior, transition, stats, weights):
    """Analytic gradients of the moment objective in (prior, transition).

    The empirical pair/triple tensors are ordered-tuple counts and need not
    be symmetric, so each label slot contributes its own term.
    """
    w1, w2, w3 = weights
    m1, m2, m3 = predicted_moments(prior, transition)
    r1 = w1 * (m1 - stats.singles)
    r2 = w2 * (m2 - stats.pairs)
    r3 = w3 * (m3 - stats.triples)
    t = transition
    grad_p = 2.0 * (
        np.einsum("i,ci->c", r1, t)
        + np.einsum("ij,ci,cj->c", r2, t, t)
        + np.einsum("ijl,ci,cj,cl->c", r3, t, t, t)
    )
    pair_part = np.einsum("mj,cj->cm", r2, t) + np.einsum("im,ci->cm", r2, t)
    triple_part = (
        np.einsum("mjl,cj,cl->cm", r3, t, t)
        + np.einsum("iml,ci,cl->cm", r3, t, t)
        + np.einsum("ijm,ci,cj->cm", r3, t, t)
    )
    grad_t = 2.0 * prior[:, None] * (r1[None, :] + pair_part + triple_part)
    return grad_p, grad_t


def _theta_to_full(theta, k):
    """Reduced free coordinates back to (prior, transition); the last entry of
    each simplex block is one minus the rest."""
    p = np.empty(k)
    p[: k - 1] = theta[: k - 1]
    p[-1] = 1.0 - theta[: k - 1].sum()
    rest = theta[k - 1 :].reshape(k, k - 1)
    t = np.empty((k, k))
    t[:, : k - 1] = rest
    t[:, -1] = 1.0 - rest.sum(axis=1)
    return p, t


def _project_pair(p, t):
    return project_simplex(p), np.stack([project_simplex(row) for row in t])


def _gauss_newton_polish(stats, p, t, obj, weights, trace, max_steps=60):
    """Damped Gauss-Newton endgame on the moment residuals.

    Projected gradient descent crawls through the nearly flat valleys these
    objectives develop when the transition matrix is weakly diagonal
    dominant; a few Gauss-Newton steps finish the job. Candidates are
    projected back onto the simplexes and accepted only when they lower the
    objective, so the recorded trace stays non-increasing and feasible.
    Returns (p, t, obj, converged).
    """
    k = p.shape[0]
    if k < 2:
        return p, t, obj, True
    n_vars = (k - 1) * (k + 1)
    lam = 1e-6
    eps = 1e-7
    for _ in range(max_steps):
        if obj < 1e-16:
            return p, t, obj, True
        theta = np.concatenate([p[: k - 1], t[:, : k - 1].ravel()])
        r0 = _residuals(p, t, stats, weights)
        jac = np.empty((r0.size, n_vars))
        for v in range(n_vars):
            bumped = theta.copy()
            bumped[v] += eps
            jac[:, v] = (_residuals(*_theta_to_full(bumped, k), stats, weights) - r0) / eps
        grad = jac.T @ r0
        hess = jac.T @ jac
        accepted = False
        for _ in range(10):
            try:
                step = np.linalg.solve(hess + lam * np.eye(n_vars), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand_p, cand_t = _project_pair(*_theta_to_full(theta - step, k))
            cand_obj = moment_objective(cand_p, cand_t, stats, weights)
            if cand_obj < obj:
                improved = obj - cand_obj
                p, t, obj = cand_p, cand_t, cand_obj
                trace.append(obj)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if improved <= 1e-9 * max(obj, 1e-12):
                    return p, t, obj, True  # relative progress exhausted
                break
            lam *= 10.0
        if not accepted:
            return p, t, obj, True  # no descent direction left at this damping
    return p, t, obj, False


def fit_noise_model(
    stats: ConsensusStats,
    n_classes: int | None = None,
    restarts: int = 10,
    *,
    seed=0,
    weights=(1.0, 1.0, 1.0),
    learning_rate: float = 0.1,
    max_iters: int = 1500,
    tol: float = 1e-12,
    record_objectives: list | None = None,
) -> NoiseModel:
    """Fit (prior, transition) to consensus statistics, keeping the best of
    ``restarts`` random initializations.

    Each restart starts from a Dirichlet(1) prior and transition rows mixed
    0.7 toward the identity, 0.3 toward a random simplex point, runs
    projected gradient descent (every step backtracks by halving until the
    objective does not increase, growing back afterwards, capped at
    ``learning_rate``), then finishes with a damped Gauss-Newton polish. The
    objective is non-increasing along every accepted trajectory. If the
    budget runs out before the improvement floor is reached, the best iterate
    so far is returned with a warning.

    ``record_objectives``, when given, receives one list per restart with the
    accepted objective value at every step.
    """
    k = stats.n_classes if n_classes is None else int(n_classes)
    if stats.singles.shape != (k,):
        raise DataError(f"stats are for {stats.n_classes} classes, expected {k}")
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    rng = as_generator(seed)

    best_obj = np.inf
    best = None
    best_converged = True
    eye = np.eye(k)
    for _ in range(restarts):
        p = rng.dirichlet(np.ones(k))
        t = 0.7 * eye + 0.3 * rng.dirichlet(np.ones(k), size=k)
        obj = moment_objective(p, t, stats, weights)
        trace = [obj]
        if record_objectives is not None:
            record_objectives.append(trace)
        lr = learning_rate
        converged = False
        for _ in range(max_iters):
            grad_p, grad_t = _gradients(p, t, stats, weights)
            lr = min(learning_rate, lr * 2.0)
            while lr >= 1e-14:
                cand_p = project_simplex(p - lr * grad_p)
                cand_t = np.stack([project_simplex(row) for row in t - lr * grad_t])
                cand_obj = moment_objective(cand_p, cand_t, stats, weights)
                if cand_obj <= obj:
                    break
                lr *= 0.5
            else:
                # Step size floor reached: no further descent possible.
                converged = True
                break
            improved = obj - cand_obj
            p, t, obj = cand_p, cand_t, cand_obj
            trace.append(obj)
            if improved < tol:
                converged = True
                break
        p, t, obj, polished = _gauss_newton_polish(stats, p, t, obj, weights, trace)
        converged = converged or polished
        if obj < best_obj:
            best_obj = obj
            best = (p, t)
            best_converged = converged

    if not best_converged:
        warnings.warn(
            "noise-model fit hit the iteration budget; returning the best iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    p, t = best
    return NoiseModel(prior=p, transition=t, noisy_marginal=stats.singles.copy())


def posterior_clean(model: NoiseModel) -> np.ndarray:
    """Per-class probability that an instance carrying noisy label j is clean:
    prior[j] * transition[j, j] / noisy_marginal[j], clipped into [0, 1].

    Classes absent from the data (zero noisy marginal) get posterior 1.0; no
    instance exists for them to flag.
    """
    q = model.noisy_marginal
    num = model.prior * np.diag(model.transition)
    post = np.ones_like(q)
    present = q > 0
    post[present] = num[present] / q[present]
    if (post > 1.0 + 1e-12).any():
        warnings.warn(
            "estimated posterior exceeded 1; clipping (estimator inconsistency)",
            RuntimeWarning,
            stacklevel=2,
        )
    return np.clip(post, 0.0, 1.0)
