# paratomo/predict.py
"""
Expectation values of recovered parametrized states at arbitrary parameters.

Tr[O rho_hat(x)] = sum_k Tr[O alpha_hat_k] phi_k(x) = sum_i m_i(x) Tr[O rho_hat(x_i)],
with prediction weights m_i(x) = sum_{k in S} (A_S^+)_{k,i} phi_k(x).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CapabilityError
from .qsim import pauli_terms
from .recovery import observation_expectation
from .tomo import ShadowData
from .utils import make_rng

COEFFICIENTS = "coefficients"
WEIGHTS = "weights"


@dataclass
class PredictionWeights:
    x: float
    m: np.ndarray

    @property
    def l1(self):
        return float(np.abs(self.m).sum())


def _labels(report):
    return tuple(report.alpha_hat.support)


def _basis(report):
    return report.alpha_hat.basis


def _check_point(report, x):
    low, high = _basis(report).domain
    if not low <= x <= high:
        raise ArgumentError(f"Parameter {x} lies outside the basis domain [{low}, {high}].")


def prediction_weights(report, x):
    """m(x) = phi_S(x) A_S^+ from the pseudo-inverse stored in the report."""
    _check_point(report, x)
    phi = _basis(report).evaluate(_labels(report), [x])[0]
    return PredictionWeights(float(x), phi @ report.pinv)


def predict_expectation(report, O, x, route=COEFFICIENTS):
    """
    Tr[O rho_hat(x)] through the recovered coefficients or through the weights.

    :raises CapabilityError: for matrix observables on shadow-backed reports.
    """
    _check_point(report, x)
    batches = getattr(report.alpha_hat, "batches", 1)
    if report.shadow_backed and pauli_terms(O) is None:
        raise CapabilityError("Shadow-backed predictions need a Pauli word or a Pauli sum.")
    if route == COEFFICIENTS:
        phi = _basis(report).evaluate(_labels(report), [x])[0]
        value = phi @ report.alpha_hat.scalar_coefficients(O)
    elif route == WEIGHTS:
        m = prediction_weights(report, x).m
        value = m @ np.array([observation_expectation(o, O, batches) for o in report.observations])
    else:
        raise ArgumentError(f"Unknown prediction route '{route}'.")
    return float(np.real(value))


@dataclass
class SampledPrediction:
    """Importance-sampled estimate with its standard error."""

    value: float
    stderr: float
    evaluated: int
    zero_weights: bool = False

    def __float__(self):
        return self.value


def _term_budgets(terms, budget):
    """
    Splits `budget` over the terms in proportion to |h_j| by largest remainders,
    so that the shares always sum to the budget. Ties go to the earlier term.
    """
    weights = np.array([abs(h) for h, _ in terms], dtype=float)
    if weights.sum() == 0:
        return [0] * len(terms)
    quotas = budget * weights / weights.sum()
    shares = np.floor(quotas).astype(int)
    leftover = budget - int(shares.sum())
    order = np.argsort(-(quotas - shares), kind="stable")
    shares[order[:leftover]] += 1
    return shares.tolist()


def predict_importance_sampled(report, O, x, budget, rng_seed=None):
    """
    Draws a sample point i with probability |m_i| / sum|m|, one snapshot of that
    point's shadow uniformly, and averages sign(m_i) sum|m| times the snapshot
    value. Each term of a Pauli sum gets a budget share proportional to |h_j|.
    """
    if budget < 1:
        raise ArgumentError("Importance sampling needs a budget of at least one snapshot.")
    if not report.shadow_backed:
        raise CapabilityError("Importance sampling needs shadow observations.")
    terms = pauli_terms(O)
    if terms is None:
        raise CapabilityError("Importance sampling evaluates Pauli words and Pauli sums only.")
    m = prediction_weights(report, x).m
    total = float(np.abs(m).sum())
    if total == 0.0:
        logging.warning("All prediction weights vanish at x = %.6g; returning zero.", x)
        return SampledPrediction(0.0, 0.0, 0, zero_weights=True)

    rng = make_rng(rng_seed)
    probs = np.abs(m) / total
    phases = np.where(np.abs(m) > 0, m / np.where(np.abs(m) > 0, np.abs(m), 1.0), 0.0)
    shadows = report.observations
    value, variance, evaluated = 0.0, 0.0, 0
    for (h, label), share in zip(terms, _term_budgets(terms, budget)):
        if share == 0:
            logging.debug("Term %s received no snapshots out of a budget of %d.", label, budget)
            continue
        points = rng.choice(m.size, size=share, p=probs)
        samples = np.empty(share)
        for i in np.unique(points):
            rows = np.nonzero(points == i)[0]
            picks = rng.integers(0, len(shadows[i]), size=rows.size)
            snap = ShadowData(shadows[i].n_qubits, shadows[i].bases[picks], shadows[i].outcomes[picks])
            samples[rows] = np.real(phases[i] * total * snap.snapshot_values(label))
            evaluated += rows.size
        value += h * samples.mean()
        if share > 1:
            variance += h ** 2 * samples.var(ddof=1) / share
    logging.debug("Importance-sampled prediction at x = %.6g evaluated %d snapshots.", x, evaluated)
    return SampledPrediction(float(value), math.sqrt(variance), evaluated)


def trajectory_rows(report, observables, points, route=COEFFICIENTS, budget=None, rng_seed=None):
    """
    Rows (x, observable_id, estimate, stderr) over a parameter grid.

    :param observables: Mapping of observable ids to Pauli words, Pauli sums or matrices.
    :param budget: Snapshot budget per prediction; deterministic evaluation when None.
    """
    rows = []
    rng = make_rng(rng_seed)
    for observable_id, O in observables.items():
        for x in points:
            if budget is None:
                estimate, stderr = predict_expectation(report, O, x, route), None
            else:
                sampled = predict_importance_sampled(report, O, x, budget, rng)
                estimate, stderr = sampled.value, sampled.stderr
            rows.append({"x": float(x), "observable_id": observable_id, "estimate": estimate, "stderr": stderr})
    logging.info("Evaluated %d observables on %d grid points.", len(observables), len(points))
    return rows
