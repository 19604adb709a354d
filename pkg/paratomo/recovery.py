# paratomo/recovery.py
"""
Sparse and full recovery of parametrized quantum states.

Given observations rho_hat(x_i) at M sampled parameter values and the sampling
matrix A, the coefficients on a support S are alpha_hat_S = A_S^+ rho_hat,
computed as operator-valued linear combinations of the observations.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import bos
from .csolve import pseudo_inverse, pseudo_inverse_norm_bound, smallest_singular_value
from .errors import ArgumentError, CapabilityError
from .norms import PAULI_LIST, ParametrizedOperator, apply_to_operators, induced_lp_vector
from .qsim import as_matrix, observable_matrix, pauli_terms
from .tomo import ShadowData, acquire
from .utils import spawn_rngs

C1 = 103140
C2 = 2736
C_FULL = 11

COROLLARY = "corollary"
ALGORITHM1 = "algorithm1"
FORMULA_VARIANTS = (COROLLARY, ALGORITHM1)

THEOREM = "theorem"
EMPIRICAL = "empirical"

COEFFICIENT_FORMAT_VERSION = 1


def sample_count_sparse(s, D, K, Delta, delta, variant=ALGORITHM1):
    """
    Number of parameter samples for sparse recovery.

    corollary:  (s K^2 / Delta^2) (C1 ln(300 s) ln(4D) + C2 ln(2/delta))
    algorithm1: (s K^2 / Delta^2) (C1 ln^2(300 s) ln(4D) + C2 ln(2/delta))
    """
    if not 1 <= s <= D:
        raise ArgumentError(f"Sparsity {s} outside [1, {D}].")
    if not 0 < Delta <= 1:
        raise ArgumentError(f"Delta must lie in (0, 1], got {Delta!r}.")
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta!r}.")
    if variant == COROLLARY:
        log_s = math.log(300 * s)
    elif variant == ALGORITHM1:
        log_s = math.log(300 * s) ** 2
    else:
        raise ArgumentError(f"Unknown formula variant '{variant}'.")
    return math.ceil(s * K ** 2 / Delta ** 2 * (C1 * log_s * math.log(4 * D) + C2 * math.log(2 / delta)))


def sample_count_full(D, K, delta):
    """M = ceil(C D K^2 ln(2D / delta)) with C = 11."""
    if D < 1:
        raise ArgumentError("D must be at least 1.")
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta!r}.")
    return math.ceil(C_FULL * D * K ** 2 * math.log(2 * D / delta))


@dataclass
class RecoveryPlan:
    """Parameters of one sparse (or full, when support is None) recovery."""

    basis: bos.BasisSystem
    support: tuple
    Delta: float
    epsilon: float
    delta: float
    M: int
    formula_variant: str = ALGORITHM1
    mode: str = EMPIRICAL

    def __post_init__(self):
        if self.M < 1:
            raise ArgumentError("A plan needs at least one parameter sample.")
        if not 0 < self.Delta <= 1:
            raise ArgumentError(f"Delta must lie in (0, 1], got {self.Delta!r}.")
        if self.support is not None:
            self.support = tuple(sorted(int(k) for k in self.support))
            self.basis.positions(self.support)

    @property
    def full(self):
        return self.support is None

    @property
    def labels(self):
        return tuple(self.basis.index_set) if self.full else self.support

    @property
    def s(self):
        return len(self.labels)

    @property
    def per_point(self):
        """(epsilon', delta') = (epsilon / sqrt(6), delta / 2M)."""
        return self.epsilon / math.sqrt(6.0), self.delta / (2.0 * self.M)

    def to_dict(self):
        return {
            "basis": {"kind": self.basis.kind, "labels": list(self.basis.index_set), "K": self.basis.bound_K},
            "support": list(self.labels),
            "full": self.full,
            "Delta": self.Delta,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "M": self.M,
            "formula_variant": self.formula_variant,
            "mode": self.mode,
        }


def make_sparse_plan(basis, support, Delta, epsilon, delta, mode=EMPIRICAL, M=None, variant=ALGORITHM1):
    """Plan for Algorithm-1 recovery; theorem mode derives M from sample_count_sparse."""
    if mode == THEOREM:
        M = sample_count_sparse(len(support), basis.size, basis.bound_K, Delta, delta, variant)
    elif M is None:
        raise ArgumentError("Empirical mode needs an explicit parameter sample count M.")
    return RecoveryPlan(basis, tuple(support), Delta, epsilon, delta, int(M), variant, mode)


def make_full_plan(basis, epsilon, delta, mode=EMPIRICAL, M=None):
    if mode == THEOREM:
        M = sample_count_full(basis.size, basis.bound_K, delta)
    elif M is None:
        raise ArgumentError("Empirical mode needs an explicit parameter sample count M.")
    return RecoveryPlan(basis, None, 1.0, epsilon, delta, int(M), mode=mode)


def total_sample_count(plan, procedure):
    """N = M T(epsilon / sqrt(6), delta / 2M, n)."""
    eps, dlt = plan.per_point
    return plan.M * procedure.sample_count(eps, dlt)


@dataclass
class ShadowCoefficients:
    """
    Coefficients alpha_k = sum_i w_ki sigma_hat(x_i) kept as weighted snapshot
    collections; only Pauli observables can be evaluated without densifying.
    """

    basis: bos.BasisSystem
    support: tuple
    weights: np.ndarray
    shadows: list = field(repr=False)
    batches: int = 1

    @property
    def n_qubits(self):
        return self.shadows[0].n_qubits

    def point_expectations(self, observable):
        """Tr[O sigma_hat(x_i)] for every sample point."""
        terms = pauli_terms(observable)
        if terms is None:
            raise CapabilityError("Shadow-backed coefficients only evaluate Pauli words and Pauli sums.")
        return np.array([sum(w * sh.expectation(label, self.batches) for w, label in terms) for sh in self.shadows])

    def scalar_coefficients(self, observable):
        return self.weights @ self.point_expectations(observable)

    def trajectory(self, observable, points):
        return self.basis.evaluate(self.support, points) @ self.scalar_coefficients(observable)

    def reduce(self, keep):
        keep = sorted(set(int(q) for q in keep))
        if any(q < 0 or q >= self.n_qubits for q in keep):
            raise ArgumentError(f"Subset {keep} is not contained in the {self.n_qubits} qubits.")
        reduced = [ShadowData(len(keep), sh.bases[:, keep], sh.outcomes[:, keep]) for sh in self.shadows]
        return ShadowCoefficients(self.basis, self.support, self.weights, reduced, self.batches)

    def densify(self, max_qubits=10):
        dense = [sh.dense(max_qubits) for sh in self.shadows]
        return ParametrizedOperator(self.basis, self.support, apply_to_operators(self.weights, dense))


@dataclass
class ErrorBudget:
    """gamma_l2 + Delta gamma_l1 + epsilon."""

    gamma_l2: float
    delta_gamma_l1: float
    epsilon: float

    def __post_init__(self):
        if min(self.gamma_l2, self.delta_gamma_l1, self.epsilon) < 0:
            raise ArgumentError("Error budget components must be non-negative.")

    @property
    def total(self):
        return self.gamma_l2 + self.delta_gamma_l1 + self.epsilon


@dataclass
class RecoveryReport:
    alpha_hat: object
    plan: RecoveryPlan
    error_budget: ErrorBudget
    diagnostics: dict
    pinv: np.ndarray = field(repr=False)
    matrix: bos.MeasurementMatrix = field(repr=False)
    observations: list = field(repr=False)

    @property
    def shadow_backed(self):
        return isinstance(self.alpha_hat, ShadowCoefficients)

    def to_dict(self):
        budget = self.error_budget
        return {
            "plan": self.plan.to_dict(),
            "error_budget": {
                "gamma_l2": budget.gamma_l2,
                "delta_gamma_l1": budget.delta_gamma_l1,
                "epsilon": budget.epsilon,
                "total": budget.total,
            },
            "diagnostics": self.diagnostics,
            "shadow_backed": self.shadow_backed,
        }

    def coefficient_arrays(self, max_qubits=10):
        """Versioned payload for the binary coefficient sidecar."""
        alpha = self.alpha_hat.densify(max_qubits) if self.shadow_backed else self.alpha_hat
        return coefficient_arrays(alpha)


def coefficient_arrays(alpha):
    return {
        "format_version": np.array(COEFFICIENT_FORMAT_VERSION),
        "basis_kind": np.array(alpha.basis.kind),
        "index_set": np.array(alpha.basis.index_set),
        "support": np.array(alpha.support),
        "coeffs": np.stack(alpha.coeffs),
    }


def operator_from_arrays(arrays):
    """Inverse of coefficient_arrays."""
    if int(arrays["format_version"]) != COEFFICIENT_FORMAT_VERSION:
        raise ArgumentError(f"Unsupported coefficient format version {int(arrays['format_version'])}.")
    labels = tuple(int(k) for k in arrays["index_set"])
    kind = str(arrays["basis_kind"])
    K = 1.0 if kind == bos.FOURIER else math.sqrt(2.0)
    basis = bos.BasisSystem(kind, labels, K)
    return ParametrizedOperator(basis, [int(k) for k in arrays["support"]], list(arrays["coeffs"]))


def _is_shadow(observation):
    return isinstance(observation, ShadowData)


def _dense(observation):
    return observation.dense() if hasattr(observation, "dense") else as_matrix(observation)


def recover_sparse(plan, S, observations, A, gammas=(0.0, 0.0), batches=1):
    """
    alpha_hat_S = A_S^+ rho_hat.

    :param gammas: Known (gamma_l2, gamma_l1) sparsity defects entering the error budget.
    :param batches: Median-of-means batches for shadow-backed evaluation.
    :raises SingularMatrixError: if A_S is not injective.
    """
    S = sorted(int(k) for k in S)
    if len(observations) != A.M:
        raise ArgumentError(f"{len(observations)} observations for {A.M} sample points.")
    if not S:
        raise ArgumentError("Empty support.")
    A_S = A.columns(S)
    pinv = pseudo_inverse(A_S)
    sigma_min = smallest_singular_value(A_S)
    diagnostics = {
        "M": A.M,
        "D": A.basis.size,
        "s": len(S),
        "smallest_singular_value": sigma_min,
        "pinv_norm": float(1.0 / sigma_min),
        "pinv_bound_at_half": pseudo_inverse_norm_bound(A.M, 0.5),
    }
    if all(_is_shadow(o) for o in observations):
        alpha = ShadowCoefficients(A.basis, tuple(S), pinv, list(observations), batches)
        diagnostics["residual"] = None
    else:
        stack = np.stack([_dense(o) for o in observations])
        coeffs = apply_to_operators(pinv, stack)
        alpha = ParametrizedOperator(A.basis, S, coeffs)
        fitted = np.tensordot(A_S, np.stack(coeffs), axes=1)
        diagnostics["residual"] = float(np.linalg.norm(fitted - stack))
    gamma_l2, gamma_l1 = gammas
    budget = ErrorBudget(float(gamma_l2), float(plan.Delta * gamma_l1), float(plan.epsilon))
    logging.info("Recovered %d coefficients from %d points (sigma_min(A_S) = %.4f).", len(S), A.M, sigma_min)
    return RecoveryReport(alpha, plan, budget, diagnostics, pinv, A, list(observations))


def recover_full(plan, observations, A, batches=1):
    """Algorithm-2 recovery on the whole index set; the budget is epsilon alone."""
    return recover_sparse(plan, A.basis.index_set, observations, A, (0.0, 0.0), batches)


def acquire_observations(procedure, states, plan, rng_seed=None):
    """Runs the per-point procedure at (epsilon', delta') with independent RNG streams."""
    eps, dlt = plan.per_point
    rngs = spawn_rngs(rng_seed, len(states))
    return [acquire(procedure, rho, eps, dlt, rng) for rho, rng in zip(states, rngs)]


def execute_plan(plan, state_at, procedure, rng_seed=None, gammas=(0.0, 0.0), batches=1):
    """
    Sample points, acquire, build A and recover.

    :param state_at: Callable mapping a parameter value to the state there.
    """
    point_rng, acquisition_rng = spawn_rngs(rng_seed, 2)
    points = bos.sample_measure(plan.basis, plan.M, point_rng)
    A = bos.build_measurement_matrix(plan.basis, points)
    states = [state_at(x) for x in points]
    observations = acquire_observations(procedure, states, plan, acquisition_rng)
    if plan.full:
        return recover_full(plan, observations, A, batches)
    return recover_sparse(plan, plan.support, observations, A, gammas, batches)


def deviation_bound(epsilons, p):
    """||epsilon||_p, bounding ||eta||_{O,p} for per-point tolerances epsilon_i."""
    eps = np.abs(np.asarray(epsilons, dtype=float))
    if eps.size == 0:
        raise ArgumentError("deviation_bound needs at least one tolerance.")
    if p == math.inf:
        return float(eps.max())
    return float(np.sum(eps ** p) ** (1.0 / p))


@dataclass(frozen=True)
class SupportRadius:
    R: int
    vacuous: bool

    def __int__(self):
        return self.R

    def __index__(self):
        return self.R

    def labels(self):
        return tuple(range(-self.R, self.R + 1))


def _subgaussian_prefactor(n, sigma, tau):
    return 2.0 ** (n / 2.0 + 4.0) * tau * math.pi * sigma ** 2


def subgaussian_tail_bound(n, sigma, tau, R):
    """16 2^(n/2) tau pi sigma^2 exp(-(R - 1)^2 / (8 sigma^2))."""
    return _subgaussian_prefactor(n, sigma, tau) * math.exp(-((R - 1) ** 2) / (8.0 * sigma ** 2))


def subgaussian_support_radius(n, sigma, tau, gamma):
    """
    Smallest integer R >= 2 with R >= 1 + sqrt(8 sigma^2 ln(2^(n/2+4) tau pi sigma^2 / gamma)).

    The bound is vacuous when gamma reaches the prefactor; R = 2 is returned
    flagged in that case.
    """
    if min(n, sigma, tau, gamma) <= 0:
        raise ArgumentError("subgaussian_support_radius needs positive arguments.")
    prefactor = _subgaussian_prefactor(n, sigma, tau)
    if gamma >= prefactor:
        logging.warning("Sub-Gaussian defect %.3g reaches the prefactor %.3g; bound is vacuous.", gamma, prefactor)
        return SupportRadius(2, True)
    R = max(2, math.ceil(1.0 + math.sqrt(8.0 * sigma ** 2 * math.log(prefactor / gamma))))
    return SupportRadius(R, False)


def fermionic_omega_max(n_modes, J, F=None):
    """
    Largest Bohr frequency 2 ||H||_inf = 2 ||F||_1.

    Without F, ||F||_1 <= 2n sqrt(2n - 1) J is used.
    """
    if F is not None:
        return 2.0 * float(np.linalg.svd(np.asarray(F, dtype=float), compute_uv=False).sum())
    return 2.0 * 2 * n_modes * math.sqrt(2 * n_modes - 1) * J


def chebyshev_support_cutoff(n_modes, J, gamma, horizon_T=1.0, F=None, guard=1):
    """
    R = max(ceil(e omega_max T), ceil(2n + 1/2 + log2(1/gamma))) + guard.

    Labels 0..R then carry all but gamma of the Chebyshev expansion.
    """
    if min(n_modes, gamma, horizon_T) <= 0 or J < 0:
        raise ArgumentError("chebyshev_support_cutoff needs positive arguments.")
    omega = fermionic_omega_max(n_modes, J, F) * horizon_T
    frequency_term = math.ceil(math.e * omega)
    defect_term = math.ceil(2 * n_modes + 0.5 + math.log2(1.0 / gamma))
    logging.debug(
        "Chebyshev cutoff: omega_max T = %.4f (printed bound 2n^2 J = %.4f), terms %d and %d.",
        omega, 2 * n_modes ** 2 * J, frequency_term, defect_term,
    )
    return max(frequency_term, defect_term) + guard


def nmr_guarantee(gamma, epsilon):
    """2 gamma + epsilon: S = {-R..R}, Delta = 1 and gamma_l2 <= gamma_l1 <= gamma."""
    return 2.0 * gamma + epsilon


def reduce_report(report, keep):
    """Parametrized reduced state on the qubits in `keep`."""
    return report.alpha_hat.reduce(keep)


def coefficient_error(truth, estimate, obs, p=2):
    """
    ||alpha - alpha_hat||_{O,p} over the union of both supports.

    Shadow-backed estimates need an explicit Pauli list.
    """
    if isinstance(estimate, ShadowCoefficients):
        if obs.kind != PAULI_LIST:
            raise CapabilityError("Shadow-backed errors are evaluated on explicit Pauli lists only.")
        labels = sorted(set(truth.support) | set(estimate.support))
        worst = 0.0
        for label in obs.paulis:
            diff = dict(zip(truth.support, truth.scalar_coefficients(label)))
            for k, c in zip(estimate.support, estimate.scalar_coefficients(label)):
                diff[k] = diff.get(k, 0.0) - c
            values = np.abs([diff.get(k, 0.0) for k in labels])
            worst = max(worst, float(values.max()) if p == math.inf else float(np.sum(values ** p) ** (1.0 / p)))
        return worst
    return float(induced_lp_vector((truth - estimate).coeffs, obs, p))


@dataclass
class ErrorDecomposition:
    """
    The actual error next to the three terms bounding it:
    ||alpha_Sbar|| + ||A_S^+ A_Sbar alpha_Sbar|| + ||A_S^+|| ||eta||.
    """

    error: float
    out_of_support: float
    spillover: float
    noise: float

    @property
    def bound(self):
        return self.out_of_support + self.spillover + self.noise


def error_decomposition(truth, report, true_states, obs):
    """
    Evaluates every term of the error bound for a dense report.

    :param truth: Exact ParametrizedOperator of the state (its support must lie in the basis).
    :param true_states: rho(x_i) at the report's sample points.
    """
    if report.shadow_backed:
        raise CapabilityError("The error decomposition needs dense observations.")
    S = list(report.alpha_hat.support)
    A = report.matrix
    out_labels, out_coeffs = truth.complement(S)
    if out_coeffs:
        out_of_support = float(induced_lp_vector(out_coeffs, obs, 2))
        spill = apply_to_operators(report.pinv @ A.columns(out_labels), out_coeffs)
        spillover = float(induced_lp_vector(spill, obs, 2))
    else:
        out_of_support = spillover = 0.0
    eta = [_dense(o) - as_matrix(r) for o, r in zip(report.observations, true_states)]
    noise = float(np.linalg.norm(report.pinv, 2)) * float(induced_lp_vector(eta, obs, 2))
    error = coefficient_error(truth, report.alpha_hat, obs, 2)
    return ErrorDecomposition(error, out_of_support, spillover, noise)


def observation_expectation(observation, observable, batches=1):
    """Tr[O rho_hat] for a shadow, a dense estimate or a raw state."""
    if _is_shadow(observation):
        terms = pauli_terms(observable)
        if terms is None:
            raise CapabilityError("Shadow observations only evaluate Pauli words and Pauli sums.")
        return sum(w * observation.expectation(label, batches) for w, label in terms)
    return float(np.real(np.sum(observable_matrix(observable).T * _dense(observation))))
