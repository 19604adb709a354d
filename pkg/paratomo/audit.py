# paratomo/audit.py
"""
Named numerical checks run by the `audit` subcommand.

Every check builds its own desk-scale instance from a seed, evaluates both
sides of a guarantee and reports (passed, detail). Trial counts scale with
`numerics.audit_scale`.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import bos, channels, csolve, norms, predict, qsim, recovery, suppid
from .errors import ArgumentError, SingularMatrixError
from .tomo import ExactOracle, LocalCliffordShadows, shadow_sample_count
from .utils import spawn_rngs


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"check_id": self.check_id, "passed": self.passed, "detail": self.detail}


def _trials(base, scale):
    return max(1, int(round(base * scale)))


def check_sample_counts(rng, scale, config):
    sparse = recovery.sample_count_sparse
    full = recovery.sample_count_full
    pinned = [
        (sparse(1, 1, 1.0, 1.0, 0.5, recovery.COROLLARY), 819334),
        (sparse(2, 9, 1.0, 1.0, 0.1, recovery.COROLLARY), 4745057),
        (sparse(1, 4, 1.0, 1.0, 0.1, recovery.ALGORITHM1), 9311528),
        (sparse(3, 33, 1.0, 0.5, 0.05, recovery.COROLLARY), 41230341),
        (sparse(2, 16, math.sqrt(2.0), 1.0, 0.1, recovery.ALGORITHM1), 70244080),
        (full(8, 1.0, 0.05), 508),
        (full(1, 1.0, 0.5), 16),
        (full(3, 1.0, 0.1), 136),
        (full(10, 1.0, 0.01), 837),
        (full(5, math.sqrt(2.0), 0.1), 507),
        (suppid.probe_count(16, 0.05, 0.3, 0.2), 575),
        (suppid.probe_count(7, 0.1, 0.25, 0.0), 633),
        (suppid.probe_count(1, 0.5, 1.0, 0.0), 1),
        (suppid.probe_count(4, 0.1, 0.5, 0.0), 36),
        (suppid.probe_count(9, 0.05, 0.5, 1.0), 189),
    ]
    bad = [(got, want) for got, want in pinned if got != want]
    if bad:
        logging.debug("Mismatched sample counts (got, want): %s", bad)
    return not bad, f"{len(pinned) - len(bad)}/{len(pinned)} pinned values reproduced"


def check_parseval(rng, scale, config):
    worst = 0.0
    for r in spawn_rngs(rng, _trials(20, scale)):
        n = int(r.integers(1, 3))
        basis = bos.fourier_basis(int(r.integers(1, 5))) if r.random() < 0.5 else bos.chebyshev_basis(int(r.integers(2, 10)))
        coeffs = [qsim.random_hermitian(n, r) for _ in basis.index_set]
        X = norms.ParametrizedOperator(basis, basis.index_set, coeffs)
        obs = norms.local_pauli_list(n, 1)
        a = norms.induced_Lp_seminorm(X, obs, 2)
        b = norms.induced_Lp_seminorm(X, obs, 2, config["numerics"]["quadrature_nodes"], route="quadrature")
        worst = max(worst, abs(a - b))
    return worst < 1e-7, f"max |parseval - quadrature| = {worst:.2e}"


def _sparse_instance(rng, n, basis, s):
    support = sorted(rng.choice(basis.index_set, size=s, replace=False).tolist())
    coeffs = [qsim.random_hermitian(n, rng) for _ in support]
    return norms.ParametrizedOperator(basis, support, coeffs)


# (basis kind, size parameter, s, n); every C(D, 3s) stays far below the brute-force guard.
_SPARSE_INSTANCES = (
    (bos.FOURIER, 4, 2, 2),
    (bos.FOURIER, 5, 3, 3),
    (bos.FOURIER, 6, 4, 2),
    (bos.FOURIER, 16, 1, 3),
    (bos.CHEBYSHEV, 12, 3, 2),
    (bos.CHEBYSHEV, 10, 2, 3),
)
_SPARSE_POINTS = 400
_CERTIFY_ATTEMPTS = 4


def _certified_matrix(basis, s, rng):
    """Redraws sample points until Delta_3s(A / sqrt(M)) <= 1/2, or gives up with None."""
    order = min(3 * s, basis.size)
    for _ in range(_CERTIFY_ATTEMPTS):
        A = bos.build_measurement_matrix(basis, bos.sample_measure(basis, _SPARSE_POINTS, rng))
        if csolve.rip_constant_bruteforce(A.normalized(), order).delta_s <= 0.5:
            return A
    return None


def check_exact_sparse_recovery(rng, scale, config):
    worst, uncertified = 0.0, 0
    trials = _trials(50, scale)
    for i, r in enumerate(spawn_rngs(rng, trials)):
        kind, size, s, n = _SPARSE_INSTANCES[i % len(_SPARSE_INSTANCES)]
        basis = bos.make_basis(kind, size)
        truth = _sparse_instance(r, n, basis, s)
        A = _certified_matrix(basis, s, r)
        if A is None:
            uncertified += 1
            continue
        plan = recovery.make_sparse_plan(basis, truth.support, 1.0, 0.1, 0.1, M=A.M)
        states = [ExactOracle(n).acquire(truth.evaluate(x), 0.1, 0.1, r) for x in A.sample_points]
        report = recovery.recover_sparse(plan, truth.support, states, A)
        for k in truth.support:
            worst = max(worst, float(np.linalg.norm(report.alpha_hat.coefficient(k) - truth.coefficient(k))))
    passed = uncertified == 0 and worst < 1e-8
    return passed, (
        f"max Frobenius error {worst:.2e} over {trials - uncertified} certified instances; "
        f"{uncertified} without Delta_3s <= 1/2"
    )


def check_budget_decomposition(rng, scale, config):
    worst_gap = -math.inf
    for r in spawn_rngs(rng, _trials(5, scale)):
        H = qsim.nmr_hamiltonian(2, fields=[1, 2])
        rho0, _ = qsim.prepare_subgaussian_state(H, 1.5, 0.8, r)
        truth = qsim.fourier_coefficients(H, rho0)
        basis = truth.basis
        S = [-1, 0, 1]
        points = bos.sample_measure(basis, 40, r)
        A = bos.build_measurement_matrix(basis, points)
        states = [qsim.evolve(H, rho0, x) for x in points]
        noisy = [s.matrix + 0.01 * qsim.random_hermitian(2, r) for s in states]
        plan = recovery.make_sparse_plan(basis, S, 1.0, 0.1, 0.1, M=A.M)
        report = recovery.recover_sparse(plan, S, noisy, A)
        if config["numerics"]["corrupt_coefficients"]:
            report.alpha_hat.coeffs[0] = report.alpha_hat.coeffs[0] + 0.5 * qsim.pauli_word("ZZ")
        obs = norms.local_pauli_list(2, 2)
        parts = recovery.error_decomposition(truth, report, states, obs)
        worst_gap = max(worst_gap, parts.error - parts.bound)
    return worst_gap <= 1e-10, f"max(error - bound) = {worst_gap:.3e}"


def check_shadow_guarantee(rng, scale, config):
    """
    Seeded shadow-backed recoveries of a 3-qubit sub-Gaussian state; the
    fraction of runs whose 2-local error exceeds gamma_l2 + Delta gamma_l1 + epsilon
    must stay below delta plus binomial slack.
    """
    epsilon, delta, gamma, M = 0.2, 0.1, 0.05, 40
    H = qsim.nmr_hamiltonian(3, fields=[1, 2, 4])
    basis = bos.fourier_basis(H.e_max)
    obs = norms.local_pauli_list(3, 2)
    runs = _trials(50, scale)
    cap = config["numerics"]["audit_max_snapshots"]
    violations, worst_ratio = 0, 0.0
    for r in spawn_rngs(rng, runs):
        sigma = float(r.uniform(0.6, 0.9))
        rho0, tau = qsim.prepare_subgaussian_state(H, float(r.uniform(2, 5)), sigma, r)
        radius = recovery.subgaussian_support_radius(3, sigma, tau, gamma)
        S = [k for k in radius.labels() if k in basis.index_set]
        truth = qsim.fourier_coefficients(H, rho0)
        gammas = (norms.sparsity_defect(truth, S, obs, 2), norms.sparsity_defect(truth, S, obs, 1))
        plan = recovery.make_sparse_plan(basis, S, 1.0, epsilon, delta, M=M)
        snapshots = min(shadow_sample_count(*plan.per_point, 3, 2, config["numerics"]["shadow_constant"]), cap)
        report = recovery.execute_plan(
            plan, lambda x: qsim.evolve(H, rho0, x), LocalCliffordShadows(3, ell=2, snapshots=snapshots), r, gammas
        )
        error = recovery.coefficient_error(truth, report.alpha_hat, obs, 2)
        violations += error > report.error_budget.total
        worst_ratio = max(worst_ratio, error / report.error_budget.total)
    fraction = violations / runs
    passed = fraction <= delta + 0.08
    return passed, (
        f"{violations}/{runs} runs over budget (fraction {fraction:.2f}); "
        f"max error/budget {worst_ratio:.3f} at {snapshots} snapshots per point"
    )


def check_spillover(rng, scale, config):
    violations, scanned = 0, 0
    for r in spawn_rngs(rng, _trials(20, scale)):
        basis = bos.chebyshev_basis(12)
        A = bos.build_measurement_matrix(basis, bos.sample_measure(basis, 24, r))
        An = A.normalized()
        for s in (1, 2):
            delta_2s = csolve.rip_constant_bruteforce(An, 2 * s).delta_s
            for S in itertools.combinations(range(12), s):
                rest = [k for k in range(12) if k not in S]
                for S_prime in itertools.combinations(rest, s):
                    try:
                        lhs, rhs = csolve.spillover_check(An, S, S_prime, delta_2s)
                    except SingularMatrixError:
                        continue
                    scanned += 1
                    violations += lhs > rhs + 1e-10
    return violations == 0, f"{violations} violations over {scanned} disjoint support pairs"


def check_pinv_norm(rng, scale, config):
    violations, scanned = 0, 0
    for r in spawn_rngs(rng, _trials(20, scale)):
        basis = bos.chebyshev_basis(12)
        A = bos.build_measurement_matrix(basis, bos.sample_measure(basis, 24, r))
        for s in (2, 4):
            delta = csolve.rip_constant_bruteforce(A.normalized(), s).delta_s
            bound = csolve.pseudo_inverse_norm_bound(A.M, delta)
            for S in itertools.combinations(range(12), s):
                try:
                    norm = float(np.linalg.norm(csolve.pseudo_inverse(A.entries[:, S]), 2))
                except SingularMatrixError:
                    continue
                scanned += 1
                violations += norm > bound + 1e-10
    return violations == 0, f"{violations} violations over {scanned} supports"


def check_projector_cross_term(rng, scale, config):
    violations = 0
    draws = _trials(1000, scale)
    for r in spawn_rngs(rng, draws):
        rho = qsim.random_density_matrix(3, r)
        P1, P2 = qsim.random_orthogonal_projectors(3, r)
        lhs, rhs = qsim.projector_cross_term_check(rho, P1, P2)
        violations += lhs > rhs + 1e-10
    return violations == 0, f"{violations} violations over {draws} draws"


def check_subgaussian_tail(rng, scale, config):
    violations, states = 0, _trials(20, scale)
    gamma = 0.05
    H = qsim.nmr_hamiltonian(3, fields=[1, 2, 4])
    for r in spawn_rngs(rng, states):
        sigma = float(r.uniform(0.5, 1.0))
        rho0, tau = qsim.prepare_subgaussian_state(H, float(r.uniform(2, 5)), sigma, r)
        R = recovery.subgaussian_support_radius(3, sigma, tau, gamma)
        truth = qsim.fourier_coefficients(H, rho0)
        tail = sum(qsim.trace_norm(c) for k, c in zip(truth.support, truth.coeffs) if abs(k) > R.R)
        violations += tail > gamma
    return violations == 0, f"{violations} of {states} states exceed the tail budget {gamma}"


_OMEGAS = (0.5, 2.0, 5.0, 10.0)


def check_chebyshev_expansion(rng, scale, config):
    worst = 0.0
    t = np.linspace(-1, 1, 101)
    for omega in _OMEGAS:
        cutoff = math.ceil(math.e * omega) + 40
        c = bos.chebyshev_coeffs_of_phase(omega, cutoff)
        phi = bos.chebyshev_basis(cutoff + 1).evaluate(range(cutoff + 1), t)
        worst = max(worst, float(np.abs(phi @ c - np.exp(-1j * omega * t)).max()))
    return worst < 1e-10, f"sup error {worst:.2e}"


def check_bessel_tail(rng, scale, config):
    violations, tested, worst = 0, 0, 0.0
    for omega in _OMEGAS:
        k_max = math.ceil(math.e * omega) + 40
        J = bos.bessel_j(k_max, omega)
        for k in range(math.floor(math.e * omega / 2) + 1, k_max + 1):
            tested += 1
            violations += abs(J[k]) > bos.bessel_tail_bound(omega, k) * (1 + 1e-12)
        # 1 = J_0 + 2 sum J_2k = J_0^2 + 2 sum J_k^2
        worst = max(worst, abs(J[0] + 2 * J[2::2].sum() - 1), abs(J[0] ** 2 + 2 * (J[1:] ** 2).sum() - 1))
    passed = violations == 0 and worst < 1e-12
    return passed, f"{violations} tail violations over {tested} orders; sum identity deviation {worst:.2e}"


def check_hs_estimator(rng, scale, config):
    worst = 0.0
    for r in spawn_rngs(rng, _trials(10, scale)):
        exact, sampled = suppid.hs_norm_estimator_check(qsim.random_hermitian(2, r))
        worst = max(worst, abs(exact - sampled))
    return worst < 1e-10, f"max deviation {worst:.2e}"


def _three_sparse_state(rng):
    """Balanced superposition of energies 0 and 1 of a 2-qubit integer Hamiltonian, random phases."""
    H = qsim.nmr_hamiltonian(2, fields=[1, 2])
    psi = np.zeros(4, dtype=complex)
    psi[[0, 2]] = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2)) / math.sqrt(2.0)
    return H, qsim.pure_state(psi)


def check_support_identification(rng, scale, config):
    """
    Random-probe identification of the support {-1, 0, 1}. The true gap
    min_S X_k - max_rest X_k (X_k from the exact coefficients) must exceed
    2 epsilon before a run counts.
    """
    epsilon, delta, s, M = 0.12, 0.1, 3, 48
    runs = _trials(50, scale)
    L = suppid.probe_count(7, delta, epsilon, 0.0)
    hits, separated = 0, 0
    for r in spawn_rngs(rng, runs):
        H, rho0 = _three_sparse_state(r)
        basis = bos.fourier_basis(H.e_max)
        truth = qsim.fourier_coefficients(H, rho0)
        X = np.array([suppid.normalized_hs_norm(truth.coefficient(k)) for k in basis.index_set])
        S = basis.positions([-1, 0, 1])
        if X[S].min() - np.delete(X, S).max() <= 2 * epsilon:
            continue
        separated += 1
        A = bos.build_measurement_matrix(basis, bos.sample_measure(basis, M, r))
        states = [qsim.evolve(H, rho0, x) for x in A.sample_points]
        estimate = suppid.identify_support(states, A.entries, s, L=L, rng_seed=r, labels=basis.index_set)
        hits += tuple(estimate.S) == (-1, 0, 1)
    rate = hits / separated if separated else 0.0
    passed = separated == runs and rate >= 0.9
    return passed, f"true support found in {hits}/{separated} separated runs ({runs} drawn) with L = {L}"


def check_time_reversal(rng, scale, config):
    worst = 0.0
    for r in spawn_rngs(rng, _trials(5, scale)):
        H_f = qsim.random_fermionic_hamiltonian(2, 1.0, r)
        worst = max(worst, qsim.time_reversal_conjugation(H_f).residual)
    return worst <= 1e-8, f"max ||V H V^dagger + H|| = {worst:.2e}"


def check_fermion_end_to_end(rng, scale, config):
    """
    Chebyshev recovery of 2-mode Gaussian evolutions on [-1, 1] from exact
    observations, negative times reached through the time-reversal conjugation.
    """
    gamma, M = 1e-3, 150
    grid = np.linspace(-1, 1, 101)
    worst_error, worst_residual, cutoff = 0.0, 0.0, 0
    for r in spawn_rngs(rng, _trials(3, scale)):
        H_f = qsim.random_fermionic_hamiltonian(2, 1.0, r)
        H = qsim.jordan_wigner(H_f)
        reversal = qsim.time_reversal_conjugation(H_f)
        worst_residual = max(worst_residual, reversal.residual)
        cutoff = recovery.chebyshev_support_cutoff(2, 1.0, gamma, 1.0, H_f.F)
        basis = bos.chebyshev_basis(cutoff + 1)
        rho0 = qsim.plus_state(2)
        plan = recovery.make_full_plan(basis, 0.1, 0.1, M=M)
        report = recovery.execute_plan(plan, lambda x: qsim.evolve_signed(H_f, rho0, x, reversal), ExactOracle(2), r)
        for label in ("ZI", "IZ"):
            Z = qsim.pauli_word(label)
            for x in grid:
                exact = qsim.expectation(qsim.evolve(H, rho0, x), Z)
                worst_error = max(worst_error, abs(predict.predict_expectation(report, label, x) - exact))
    passed = worst_error < 1e-6 and worst_residual <= 1e-8
    return passed, f"sup grid error {worst_error:.2e} (cutoff {cutoff}); max reversal residual {worst_residual:.2e}"


def check_prediction_routes(rng, scale, config):
    H = qsim.nmr_hamiltonian(2, fields=[1, 2])
    rho0, _ = qsim.prepare_subgaussian_state(H, 1.5, 1.0, rng)
    basis = bos.fourier_basis(H.e_max)
    plan = recovery.make_full_plan(basis, 0.1, 0.1, M=20)
    report = recovery.execute_plan(plan, lambda x: qsim.evolve(H, rho0, x), ExactOracle(2), rng)
    worst = 0.0
    for x in np.linspace(0, 2 * np.pi, 9):
        for O in ("ZI", "XX", {"ZZ": 0.5, "YI": -1.0}):
            a = predict.predict_expectation(report, O, x, predict.COEFFICIENTS)
            b = predict.predict_expectation(report, O, x, predict.WEIGHTS)
            exact = qsim.expectation(qsim.evolve(H, rho0, x), qsim.observable_matrix(O))
            worst = max(worst, abs(a - b), abs(a - exact))
    return worst < 1e-8, f"max route or oracle deviation {worst:.2e}"


def check_importance_sampling(rng, scale, config):
    H = qsim.nmr_hamiltonian(2, fields=[1, 2])
    rho0, _ = qsim.prepare_subgaussian_state(H, 1.5, 1.0, rng)
    basis = bos.fourier_basis(H.e_max)
    plan = recovery.make_full_plan(basis, 0.5, 0.1, M=16)
    report = recovery.execute_plan(plan, lambda x: qsim.evolve(H, rho0, x), LocalCliffordShadows(2, snapshots=500), rng)
    budget = _trials(20000, scale)
    x = 0.7
    sampled = predict.predict_importance_sampled(report, "ZZ", x, budget, rng)
    reference = predict.predict_expectation(report, "ZZ", x)
    z = abs(sampled.value - reference) / max(sampled.stderr, 1e-12)
    passed = z < 4 and sampled.evaluated == budget
    return passed, f"deviation {z:.2f} standard errors; {sampled.evaluated} snapshots for budget {budget}"


def check_choi_identity(rng, scale, config):
    worst = 0.0
    labels = qsim.all_pauli_labels(1)
    for r in spawn_rngs(rng, _trials(100, scale)):
        C = channels.random_channel(1, r)
        for P in labels:
            for Q in labels:
                direct = channels.pauli_transfer_probe(C, P, Q, "direct")
                choi = channels.pauli_transfer_probe(C, P, Q, "choi")
                worst = max(worst, abs(direct - choi))
    return worst < 1e-10, f"max |direct - choi| = {worst:.2e}"


def check_channel_recovery(rng, scale, config):
    basis = bos.fourier_basis(2)
    points = bos.sample_measure(basis, 12, rng)
    A = bos.build_measurement_matrix(basis, points)
    plan = recovery.make_sparse_plan(basis, [-1, 0, 1], 1.0, 0.1, 0.1, M=A.M)
    report = channels.recover_channel(plan, [channels.z_rotation_channel(x) for x in points], A)
    expected = channels.z_rotation_fourier_coefficients()
    worst = max(float(np.abs(report.alpha_hat.coefficient(k) - C).max()) for k, C in expected.items())
    return worst < 1e-9, f"max coefficient error {worst:.2e}"


CHECKS = {
    "formula.sample_counts": check_sample_counts,
    "norms.parseval": check_parseval,
    "recovery.exact_sparse": check_exact_sparse_recovery,
    "recovery.budget_decomposition": check_budget_decomposition,
    "recovery.shadow_guarantee": check_shadow_guarantee,
    "rip.spillover": check_spillover,
    "rip.pseudo_inverse_norm": check_pinv_norm,
    "subgaussian.projector_cross_term": check_projector_cross_term,
    "subgaussian.tail_radius": check_subgaussian_tail,
    "chebyshev.phase_expansion": check_chebyshev_expansion,
    "chebyshev.bessel_tail": check_bessel_tail,
    "suppid.hs_estimator": check_hs_estimator,
    "suppid.random_identification": check_support_identification,
    "fermion.time_reversal": check_time_reversal,
    "fermion.end_to_end": check_fermion_end_to_end,
    "predict.route_agreement": check_prediction_routes,
    "predict.importance_sampling": check_importance_sampling,
    "channels.choi_identity": check_choi_identity,
    "channels.rotation_recovery": check_channel_recovery,
}


def run_checks(config, only=None):
    """Runs the named checks (all by default) with per-check seeds derived from the config seed."""
    names = list(CHECKS) if only is None else list(only)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ArgumentError(f"Unknown check id '{unknown[0]}'.")
    scale = config["numerics"]["audit_scale"]
    rngs = dict(zip(CHECKS, spawn_rngs(config["seed"], len(CHECKS))))
    results = []
    for name in names:
        logging.info("Running check %s...", name)
        passed, detail = CHECKS[name](rngs[name], scale, config)
        result = CheckResult(name, bool(passed), detail)
        (logging.info if result.passed else logging.error)("  %s %s: %s", "PASS" if passed else "FAIL", name, detail)
        results.append(result)
    return results
