"""Exact joint distribution of (root value, leaf sum) and the ceilings built on it.

Setup
-----
Leaves of a balanced k-ary tree of depth d are i.i.d. Bernoulli(p).  Let V be
the root value and S the leaf sum.  We compute mass_v[s] = P(V = v, S = s)
exactly (up to float64 rounding) by a bottom-up DP over tree levels:

  * a leaf has mass_1[1] = p, mass_0[0] = 1 - p;
  * an internal node with k i.i.d. children of distribution (mass_0, mass_1)
    combines child values through the node rule and child sums by
    convolution.  Every supported rule (MAJ/ALL/ANY) is symmetric in its
    children, so the 2**k child-value combinations are grouped by their
    ones-count j: each group contributes C(k, j) times the convolution
    mass_1^{*j} * mass_0^{*(k-j)}, routed to the value the rule yields on
    j ones.

From the joint distribution:

  * bayes_sum_accuracy: sum_s max(mass_0[s], mass_1[s]) -- the best accuracy
    any predictor seeing only the leaf sum can reach.
  * permuted_oracle_score: sum_s P(S=s) * (q_s^2 + (1-q_s)^2) with
    q_s = P(V=1 | S=s).  Conditioned on the sum, every same-sum leaf string
    is equally likely, so a uniformly permuted input is uniform over
    same-sum strings and independent of the original root value; the score
    is therefore exact, not an approximation.

Probabilities stay in float64 throughout; combinatorial counts are never
materialized (they overflow long before n = 729).  Zero-mass sums define
q_s = 0 by convention, which is unobservable because those terms carry zero
weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .trees import Alternation, NodeRule, PrereqTree, RuleSpec, apply_rule, evaluate_batch, maj

DEFAULT_MAX_LEAVES = 3 ** 7


@dataclass(frozen=True)
class SumValueDist:
    """Joint P(root value, leaf sum) for i.i.d. Bernoulli(p) leaves.

    mass0[s] and mass1[s] cover s = 0..k**d; entries are nonnegative and the
    two vectors sum to 1 (within float tolerance).
    """

    k: int
    d: int
    p: float
    mass0: np.ndarray
    mass1: np.ndarray

    @property
    def n(self) -> int:
        return self.k ** self.d

    def validate(self, tol: float = 1e-9) -> None:
        if self.mass0.shape != (self.n + 1,) or self.mass1.shape != (self.n + 1,):
            raise ValueError("mass vectors must cover sums 0..k**d")
        if (self.mass0 < -tol).any() or (self.mass1 < -tol).any():
            raise ValueError("negative probability mass")
        total = float(self.mass0.sum() + self.mass1.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"joint mass sums to {total}, not 1")


def _rules_by_height(rule: RuleSpec, k: int, d: int) -> list[NodeRule]:
    """Rule applied at each height 1..d above the leaves (index 0 = height 1)."""
    if isinstance(rule, Alternation):
        return [rule.rule_at_depth(d - h) for h in range(1, d + 1)]
    if isinstance(rule, NodeRule):
        return [rule] * d
    raise ValueError("rule must be a NodeRule or an Alternation")


def joint_sum_value_distribution(k: int, d: int, p: float, rule: RuleSpec | None = None,
                                 max_leaves: int = DEFAULT_MAX_LEAVES) -> SumValueDist:
    """Bottom-up DP for the joint (root value, leaf sum) distribution."""
    if not isinstance(k, int) or k < 1:
        raise ValueError("k must be a positive integer")
    if not isinstance(d, int) or d < 0:
        raise ValueError("d must be a non-negative integer")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if k ** d > max_leaves:
        raise ValueError(f"k**d = {k ** d} exceeds the size limit {max_leaves}")
    if rule is None:
        rule = maj(k)

    mass0 = np.array([1.0 - p, 0.0])
    mass1 = np.array([0.0, p])
    for level_rule in _rules_by_height(rule, k, d):
        # Convolution powers of the child distributions: pow1[j] = mass1^{*j}.
        pow0 = [np.array([1.0])]
        pow1 = [np.array([1.0])]
        for _ in range(k):
            pow0.append(np.convolve(pow0[-1], mass0))
            pow1.append(np.convolve(pow1[-1], mass1))
        width = k * (mass0.shape[0] - 1) + 1
        new0 = np.zeros(width)
        new1 = np.zeros(width)
        for j in range(k + 1):
            # Rules are symmetric, so any combination with j ones represents
            # all C(k, j) orderings.
            v = apply_rule(level_rule, [1] * j + [0] * (k - j))
            term = comb(k, j) * np.convolve(pow1[j], pow0[k - j])
            if v:
                new1[: term.shape[0]] += term
            else:
                new0[: term.shape[0]] += term
        mass0, mass1 = new0, new1

    dist = SumValueDist(k=k, d=d, p=p, mass0=mass0, mass1=mass1)
    dist.validate()
    return dist


def bayes_sum_accuracy(dist: SumValueDist) -> float:
    """Best accuracy of any predictor that observes only the leaf sum."""
    return float(np.maximum(dist.mass0, dist.mass1).sum())


def permuted_oracle_score(dist: SumValueDist) -> float:
    """Exact P(true evaluator on uniformly permuted leaves matches original label)."""
    p_sum = dist.mass0 + dist.mass1
    q = np.divide(dist.mass1, p_sum, out=np.zeros_like(p_sum), where=p_sum > 0)
    return float((p_sum * (q ** 2 + (1.0 - q) ** 2)).sum())


def majority_class_accuracy(dist: SumValueDist) -> float:
    """Accuracy of always predicting the more likely root value."""
    p1 = float(dist.mass1.sum())
    return max(p1, 1.0 - p1)


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    stderr: float
    samples: int
    degenerate: bool


def monte_carlo_check(tree: PrereqTree, estimator: str, samples: int, seed: int,
                      p: float = 0.5) -> MonteCarloResult:
    """Empirical cross-check of the exact ceilings by seeded simulation.

    estimator = "bayes_sum": accuracy of the exact-DP Bayes decision rule on
    sampled assignments.  estimator = "permuted_oracle": rate at which the
    true evaluator on a uniformly permuted assignment reproduces the
    original root value.  Returns the estimate with its binomial standard
    error; a single-sample run is flagged degenerate.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if tree.k is None:
        raise ValueError("Monte Carlo checks need a balanced tree (uniform arity)")
    rng = np.random.default_rng(seed)
    n = tree.n_slots
    X = (rng.random((samples, n)) < p).astype(np.uint8)
    roots = evaluate_batch(tree, X)[:, 0]

    if estimator == "bayes_sum":
        rule = NodeRule.from_spec(tree.rule_spec) if tree.rule_spec.get("kind") in ("MAJ", "ALL", "ANY") else None
        dist = joint_sum_value_distribution(tree.k, tree.depth, p, rule=rule)
        # Ties broken toward 1; accuracy is unaffected since both terms hit max.
        decision = (dist.mass1 >= dist.mass0).astype(np.uint8)
        hits = decision[X.sum(axis=1)] == roots
    elif estimator == "permuted_oracle":
        Xp = rng.permuted(X, axis=1)
        hits = evaluate_batch(tree, Xp)[:, 0] == roots
    else:
        raise ValueError(f"unknown estimator {estimator!r}")

    est = float(hits.mean())
    stderr = sqrt(est * (1.0 - est) / samples)
    return MonteCarloResult(
        estimate=est,
        stderr=stderr,
        samples=samples,
        degenerate=samples == 1 or stderr == 0.0,
    )
