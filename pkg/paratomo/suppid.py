# paratomo/suppid.py
"""
Support identification by Hilbert-Schmidt ranking of coefficient operators.

Every probe draws a uniformly random Pauli word P (identity included), solves
the scalar problem A c = (Tr[P rho_hat(x_i)])_i with hard thresholding pursuit
and accumulates |c_k^#(P)|^2. The estimate X_hat_k = sqrt(mean |c_k^#|^2) ranks
the labels and the s largest form the support.

Hilbert-Schmidt norms in this module are normalized, ||a||_2 = ||a||_F / sqrt(d),
so that ||a||_2^2 = mean_P |Tr[P a]|^2 over all 4^n Pauli words.
"""
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .csolve import htp_solve, pseudo_inverse, rip_constant_bruteforce
from .errors import ArgumentError, GuardExceededError, RipNotCertifiedError, SingularMatrixError
from .qsim import all_pauli_labels, as_matrix, check_qubits, num_qubits, pauli_word
from .recovery import observation_expectation
from .utils import spawn_rngs

EXHAUSTIVE_QUBIT_CAP = 4
HS_CHECK_QUBIT_CAP = 5
RIP_TARGET = 0.5
# Non-normative placeholders for the solver constants of the worst-case criterion.
DEFAULT_D1 = 3.0
DEFAULT_D2 = 6.0


def probe_count(D, delta, epsilon, kappa):
    """L = ceil(ln(2D / delta) (1 + kappa)^2 / (2 epsilon^4))."""
    if D < 1 or not 0 < delta < 1 or epsilon <= 0 or kappa < 0:
        raise ArgumentError("probe_count needs D >= 1, delta in (0, 1), epsilon > 0 and kappa >= 0.")
    return math.ceil(math.log(2 * D / delta) * (1 + kappa) ** 2 / (2 * epsilon ** 4))


def top_s(values, s):
    """Indices of the s largest values, ties going to the lowest index, sorted."""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return np.sort(order[:s])


def _gap(xhat, chosen):
    mask = np.zeros(xhat.size, dtype=bool)
    mask[chosen] = True
    if mask.all():
        return float("inf")
    return float(xhat[mask].min() - xhat[~mask].max())


@dataclass
class SupportEstimate:
    S: tuple
    xhat: np.ndarray
    L: int
    gap: float
    labels: tuple = ()
    seeds: dict = field(default_factory=dict)
    anomalies: list = field(default_factory=list)
    local_support_rate: float = None

    def to_dict(self):
        return {
            "S": [int(k) for k in self.S],
            "xhat": {str(k): float(v) for k, v in zip(self.labels, self.xhat)},
            "gap": self.gap,
            "L": self.L,
            "seeds": self.seeds,
            "anomalies": self.anomalies,
            "local_support_rate": self.local_support_rate,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _random_pauli_label(n_qubits, rng):
    digits = rng.integers(0, 4, size=n_qubits)
    return "".join("IXYZ"[d] for d in digits)


def _check_rip(A, s, certificate, strict):
    """Delta_3s(A / sqrt(M)) <= 1/2, brute force unless a certificate is supplied."""
    order = min(3 * s, A.shape[1])
    if certificate is None:
        try:
            certificate = rip_constant_bruteforce(A / math.sqrt(A.shape[0]), order)
        except GuardExceededError as e:
            message = f"RIP of order {order} could not be certified: {e}"
            if strict:
                raise RipNotCertifiedError(message, None) from e
            logging.warning(message)
            return None
    if certificate.delta_s > RIP_TARGET:
        message = (
            f"Delta_{order}(A/sqrt(M)) = {certificate.delta_s:.4f} exceeds {RIP_TARGET}; "
            "the identification guarantee does not apply."
        )
        if strict:
            raise RipNotCertifiedError(message, certificate.delta_s)
        logging.warning(message)
    return certificate


def coefficient_bound_check(c_sharp_value, kappa, tol=1e-9):
    """|c_k^#(P)| <= 1 + kappa, up to tol."""
    ok = bool(abs(c_sharp_value) <= 1.0 + kappa + tol)
    if not ok:
        logging.warning("Solver anomaly: |c^#| = %.6f exceeds 1 + kappa = %.6f.", abs(c_sharp_value), 1.0 + kappa)
    return ok


def identify_support(
    observations,
    A,
    s,
    L=None,
    rng_seed=None,
    strict=False,
    certificate=None,
    kappa=0.0,
    exhaustive=False,
    batches=1,
    labels=None,
    max_iters=1000,
    tol=1e-12,
):
    """
    Ranks the D columns of A by estimated Hilbert-Schmidt norm.

    :param observations: One state estimate per row of A (shadows, dense estimates or states).
    :param A: M x D sampling matrix (unnormalized).
    :param s: Support size.
    :param L: Number of random Pauli probes; ignored in exhaustive mode.
    :param strict: Refuse to run when Delta_3s(A / sqrt(M)) <= 1/2 is not certified.
    :param certificate: A precomputed RipCertificate of order 3s.
    :param kappa: Solver error bound used by the coefficient check.
    :param exhaustive: Enumerate all 4^n Pauli words instead of sampling.
    :param labels: Basis labels of the columns; defaults to 0..D-1.
    :param max_iters: HTP iteration cap per probe.
    :param tol: HTP relative residual tolerance.
    """
    A = np.asarray(A)
    M, D = A.shape
    if len(observations) != M:
        raise ArgumentError(f"{len(observations)} observations for a matrix with {M} rows.")
    if not 1 <= s <= D:
        raise ArgumentError(f"Sparsity {s} outside [1, {D}].")
    labels = tuple(range(D)) if labels is None else tuple(labels)
    n = _observation_qubits(observations[0])

    if exhaustive:
        if n > EXHAUSTIVE_QUBIT_CAP:
            raise GuardExceededError(f"Exhaustive Pauli enumeration is limited to {EXHAUSTIVE_QUBIT_CAP} qubits.")
        probes = all_pauli_labels(n)
        seeds = {"mode": "exhaustive"}
    else:
        if L is None or L < 1:
            raise ArgumentError("Random probing needs a positive probe count L.")
        probes = [_random_pauli_label(n, rng) for rng in spawn_rngs(rng_seed, L)]
        seeds = {"mode": "random", "probes": probes}
        if isinstance(rng_seed, int):
            seeds["rng_seed"] = rng_seed

    if s == D:
        xhat = np.ones(D)
        logging.info("Support size equals the basis size; returning every label.")
        return SupportEstimate(labels, xhat, len(probes), float("inf"), labels, seeds)

    _check_rip(A, s, certificate, strict)
    try:
        full_pinv = pseudo_inverse(A)
    except SingularMatrixError:
        full_pinv = None

    accum = np.zeros(D)
    anomalies = []
    agreements = 0
    for probe in probes:
        f = np.array([observation_expectation(o, probe, batches) for o in observations])
        result = htp_solve(A, f, s, max_iters, tol)
        accum += np.abs(result.c) ** 2
        for k in result.support:
            if not coefficient_bound_check(result.c[k], kappa):
                anomalies.append({"probe": probe, "label": int(labels[k]), "value": float(abs(result.c[k]))})
        if full_pinv is not None:
            agreements += np.array_equal(top_s(np.abs(full_pinv @ f), s), result.support)

    xhat = np.sqrt(accum / len(probes))
    chosen = top_s(xhat, s)
    rate = agreements / len(probes) if full_pinv is not None else None
    estimate = SupportEstimate(
        tuple(labels[k] for k in chosen), xhat, len(probes), _gap(xhat, chosen), labels, seeds, anomalies, rate
    )
    logging.info(
        "Identified support %s from %d probes (gap %.4g, %d solver anomalies).",
        list(estimate.S), estimate.L, estimate.gap, len(anomalies),
    )
    if rate is not None and rate < 1.0:
        logging.debug("HTP supports matched the least-squares top-%d in %.1f%% of probes.", s, 100 * rate)
    return estimate


def _observation_qubits(observation):
    n = getattr(observation, "n_qubits", None)
    if n is not None:
        return int(n)
    return num_qubits(as_matrix(observation).shape[0])


def normalized_hs_norm(a):
    a = np.asarray(a)
    return float(np.linalg.norm(a) / math.sqrt(a.shape[0]))


def pauli_coefficient_table(ops):
    """C[l, k] = Tr[B_l a_k] over all 4^n Pauli words B_l."""
    ops = [np.asarray(a) for a in ops]
    n = num_qubits(ops[0].shape[0])
    if n > EXHAUSTIVE_QUBIT_CAP:
        raise GuardExceededError(f"Exhaustive Pauli tables are limited to {EXHAUSTIVE_QUBIT_CAP} qubits.")
    stack = np.stack(ops)
    return np.array([np.einsum("ij,kji->k", pauli_word(b), stack) for b in all_pauli_labels(n)])


def hs_norm_estimator_check(alpha_k):
    """(||a||_F / sqrt(d), sqrt(mean_P |Tr[P a]|^2)) over all 4^n Pauli words."""
    alpha_k = np.asarray(alpha_k, dtype=complex)
    n = num_qubits(alpha_k.shape[0])
    check_qubits(n, HS_CHECK_QUBIT_CAP)
    sampled = math.sqrt(np.mean([abs(np.trace(pauli_word(b) @ alpha_k)) ** 2 for b in all_pauli_labels(n)]))
    return normalized_hs_norm(alpha_k), sampled


def sigma_s(c, s):
    """Best s-term l1 approximation error of c."""
    mags = np.sort(np.abs(np.asarray(c)))[::-1]
    return float(mags[s:].sum())


def flatness(c):
    """(1 / sqrt(d)) ||c||_2 / ||c||_inf; 1 for the zero vector."""
    c = np.abs(np.asarray(c))
    peak = c.max() if c.size else 0.0
    if peak == 0:
        return 1.0
    return float(np.linalg.norm(c) / (math.sqrt(c.size) * peak))


@dataclass
class SeparabilityMargin:
    """Both sides of the worst-case and of the flatness identification criteria."""

    worst_case_lhs: float
    worst_case_rhs: float
    flatness_lhs: float
    flatness_rhs: float
    beta_c: float
    beta_n: float

    @property
    def worst_case_holds(self):
        return self.worst_case_lhs >= self.worst_case_rhs

    @property
    def flatness_holds(self):
        return self.flatness_lhs >= self.flatness_rhs

    def to_dict(self):
        return {
            "worst_case": {"lhs": self.worst_case_lhs, "rhs": self.worst_case_rhs, "holds": self.worst_case_holds},
            "flatness": {"lhs": self.flatness_lhs, "rhs": self.flatness_rhs, "holds": self.flatness_holds},
            "beta_c": self.beta_c,
            "beta_n": self.beta_n,
        }


def separability_from_tables(C, N, S, epsilon, eta=0.0, D1=DEFAULT_D1, D2=DEFAULT_D2):
    """
    Evaluates both criteria from Pauli coefficient tables.

    :param C: d x D table, C[l, k] = Tr[B_l alpha_k], rows over all Pauli words.
    :param N: d x D table of the perturbations gamma_k.
    :param S: Column indices of the candidate support.
    :param eta: max_P ||eta_P||_2 of the observation noise.
    """
    C, N = np.asarray(C), np.asarray(N)
    if C.shape != N.shape:
        raise ArgumentError("Coefficient and perturbation tables must share a shape.")
    D = C.shape[1]
    S = sorted(int(k) for k in S)
    if not S or any(k < 0 or k >= D for k in S):
        raise ArgumentError(f"Support {S} is not a non-empty subset of 0..{D - 1}.")
    rest = [k for k in range(D) if k not in S]
    s = len(S)

    norm_c = np.sqrt(np.mean(np.abs(C) ** 2, axis=0))
    norm_n = np.sqrt(np.mean(np.abs(N) ** 2, axis=0))
    outside_c = norm_c[rest].max() if rest else 0.0
    outside_n = norm_n[rest].max() if rest else 0.0

    tail = math.sqrt(np.mean([sigma_s(row, s) ** 2 for row in C]))
    worst_lhs = float(norm_c[S].min() - outside_c)
    worst_rhs = float(2 * epsilon + 2 * D1 / math.sqrt(s) * tail + 2 * D2 * eta)

    beta_c = min((flatness(C[:, k]) for k in rest), default=1.0)
    beta_n = min((flatness(N[:, k]) for k in rest), default=1.0)
    flat_lhs = float((norm_c[S] - norm_n[S]).min())
    flat_rhs = float(2 * epsilon + (beta_c + 1) / beta_c * outside_c + (beta_n + 1) / beta_n * outside_n)
    return SeparabilityMargin(worst_lhs, worst_rhs, flat_lhs, flat_rhs, beta_c, beta_n)


def separability_margin(alphas, gammas, S, epsilon, eta=0.0, D1=DEFAULT_D1, D2=DEFAULT_D2):
    """
    Both identification criteria for coefficient operators `alphas` and
    perturbations `gammas` (sequences of matrices aligned with the labels, or
    ParametrizedOperators on the same support). S holds positions into them.
    """
    alphas = getattr(alphas, "coeffs", alphas)
    gammas = getattr(gammas, "coeffs", gammas)
    if gammas is None:
        gammas = [np.zeros_like(np.asarray(a)) for a in alphas]
    if len(alphas) != len(gammas):
        raise ArgumentError("Every coefficient operator needs a perturbation.")
    return separability_from_tables(
        pauli_coefficient_table(alphas), pauli_coefficient_table(gammas), S, epsilon, eta, D1, D2
    )
