# paratomo/runner.py
import dataclasses
import logging
import os
import sqlite3

import numpy as np

from . import bos, qsim, recovery
from .audit import run_checks
from .config import config_digest
from .database import LedgerManager
from .errors import (
    ArgumentError,
    CapabilityError,
    ConfigError,
    DomainError,
    GuardExceededError,
    RipNotCertifiedError,
    SingularMatrixError,
)
from .norms import local_pauli_list
from .predict import trajectory_rows
from .reports import ReportWriter, load_coefficients
from .suppid import identify_support, normalized_hs_norm, probe_count, separability_margin, top_s
from .tomo import make_procedure
from .utils import spawn_rngs

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

COMMANDS = {
    "run-nmr": "nmr",
    "run-fermion": "fermion",
    "support-id": "support_id",
    "recover": "recover",
    "predict": "predict",
    "audit": "audit",
}

# Theorem-mode sample counts above this are refused rather than simulated.
MAX_SIMULATED_POINTS = 100000


class ParaTomo:
    """The experiment runner."""

    def __init__(self, args, config):
        """
        Initializes the ParaTomo application.

        :param args: The command-line arguments.
        :param config: The validated configuration, including the injected 'paths' section.
        """
        self.args = args
        self.config = config
        self.ledger = None
        self.report_writer = None
        self.run_id = None

    def run(self):
        """
        Runs the selected experiment and returns the process exit code.
        Initializes components, records the run in the ledger and handles cleanup.
        """
        # Anything escaping the handlers below is re-raised and recorded as a crash.
        exit_code, status = EXIT_VALIDATION, "crashed"
        report_path = None
        try:
            experiment = self.config['experiment']
            logging.debug("--- Configuration Summary ---")
            logging.debug("Experiment: %s", experiment)
            logging.debug("Seed: %s", self.config['seed'])
            logging.debug("Dry Run: %s", self.args.dry_run)
            logging.debug("Mode: %s", self.config['recovery']['mode'])
            logging.debug("Procedure: %s", self.config['tomography']['procedure'])
            logging.debug("Output: %s", self.config['output']['dir'])

            self.report_writer = ReportWriter(self.config, self.args.dry_run)
            if not self.args.dry_run:
                self.ledger = LedgerManager(self.config['paths']['db'])
                self.ledger.setup()
                self.run_id = self.ledger.start_run(experiment, self.config['seed'], config_digest(self.config))
            else:
                logging.warning("DRY RUN MODE ENABLED: No reports or ledger entries will be written.")

            handler = {
                "nmr": self.run_nmr,
                "fermion": self.run_fermion,
                "support_id": self.run_support_id,
                "recover": self.run_recover,
                "predict": self.run_predict,
                "audit": self.run_audit,
            }[experiment]
            outcome = handler()
            report_path = outcome.get('report')
            if outcome.get('passed', True):
                exit_code, status = EXIT_OK, "ok"
            else:
                exit_code, status = EXIT_NUMERICAL, "failed"

        except (ConfigError, ArgumentError, DomainError, CapabilityError, GuardExceededError) as e:
            logging.error("Validation error: %s", e)
            exit_code, status = EXIT_VALIDATION, "invalid"
        except (SingularMatrixError, RipNotCertifiedError) as e:
            logging.error("Numerical guarantee failure: %s", e)
            exit_code, status = EXIT_NUMERICAL, "failed"
        except (OSError, sqlite3.Error) as e:
            logging.error("I/O error: %s", e)
            exit_code, status = EXIT_IO, "io_error"
        finally:
            # --- Resource Cleanup ---
            if self.ledger:
                if self.run_id is not None:
                    self.ledger.finish_run(self.run_id, status, exit_code, report_path)
                self.ledger.close_connection()
            logging.info("Run finished (exit code %d).", exit_code)
        return exit_code

    # --- Shared building blocks ---

    def _procedure(self, n_qubits):
        tomo = self.config['tomography']
        kind = tomo['procedure']
        if kind == "shadows":
            return make_procedure(kind, n_qubits, ell=tomo['ell'], snapshots=tomo['snapshots'],
                                  c0=self.config['numerics']['shadow_constant'])
        if kind == "pauli":
            return make_procedure(kind, n_qubits, shots_per_pauli=tomo['shots_per_pauli'])
        return make_procedure(kind, n_qubits)

    def _state_seed(self):
        seed = self.config['system']['state_seed']
        return self.config['seed'] if seed is None else seed

    def _initial_state(self, n_qubits):
        spec = self.config['system']['initial_state']
        if spec == "plus":
            return qsim.plus_state(n_qubits)
        if spec == "zero":
            return qsim.product_state([np.array([1, 0])] * n_qubits)
        if spec == "random":
            return qsim.random_density_matrix(n_qubits, self._state_seed())
        if len(spec) == n_qubits and set(spec) <= {"0", "1"}:
            psi = np.zeros(2 ** n_qubits)
            psi[int(spec, 2)] = 1.0
            return qsim.pure_state(psi)
        raise ConfigError(f"Unknown initial state '{spec}'", "system.initial_state")

    def _nmr_system(self):
        """Integer-spectrum Hamiltonian with a sub-Gaussian initial state."""
        system = self.config['system']
        n = system['n_qubits']
        qsim.check_qubits(n, self.config['numerics']['dense_qubit_cap'])
        couplings = {(int(i), int(j)): int(w) for i, j, w in (system['couplings'] or [])}
        H = qsim.nmr_hamiltonian(n, system['fields'], couplings)
        e0 = system['e0'] if system['e0'] is not None else H.e_max / 2.0
        rho0, tau = qsim.prepare_subgaussian_state(H, e0, system['sigma'], self._state_seed())
        return H, rho0, tau

    def _fermion_system(self):
        system = self.config['system']
        n_modes = system['n_modes']
        qsim.check_qubits(n_modes, min(self.config['numerics']['fermion_mode_cap'],
                                       self.config['numerics']['dense_qubit_cap']))
        H_f = qsim.random_fermionic_hamiltonian(n_modes, system['J'], self._state_seed())
        return H_f, self._initial_state(n_modes)

    def _plan(self, basis, support):
        rec = self.config['recovery']
        tomo = self.config['tomography']
        if support is None:
            plan = recovery.make_full_plan(basis, tomo['epsilon'], tomo['delta'], rec['mode'], rec['M'])
        else:
            plan = recovery.make_sparse_plan(basis, support, rec['Delta'], tomo['epsilon'], tomo['delta'],
                                             rec['mode'], rec['M'], rec['formula_variant'])
        if plan.M > MAX_SIMULATED_POINTS:
            raise GuardExceededError(
                f"{plan.mode} mode asks for M = {plan.M} parameter samples; "
                f"use empirical mode with recovery.M <= {MAX_SIMULATED_POINTS}."
            )
        return plan

    def _grid(self, basis):
        low, high = basis.domain
        return np.linspace(low, high, self.config['grid']['points'])

    def _repetition_seeds(self):
        reps = self.config['recovery']['repetitions']
        if reps == 1:
            return [self.config['seed']]
        return spawn_rngs(self.config['seed'], reps)

    def _trajectory_error(self, report, exact_at, points):
        """Rows for the CSV plus the largest deviation from the exact trajectories."""
        budget = self.config['grid']['budget'] if report.shadow_backed else None
        rows = trajectory_rows(report, self.config['observables'], points, budget=budget, rng_seed=self.config['seed'])
        worst = 0.0
        exact = {}
        for row in rows:
            key = (row['observable_id'], row['x'])
            if key not in exact:
                O = qsim.observable_matrix(self.config['observables'][row['observable_id']])
                exact[key] = float(np.real(qsim.expectation(exact_at(row['x']), O)))
            worst = max(worst, abs(row['estimate'] - exact[key]))
        return rows, worst

    def _dense_alpha(self, report):
        return report.alpha_hat.densify(self.config['numerics']['dense_qubit_cap']) if report.shadow_backed \
            else report.alpha_hat

    def _write(self, summary, rows=None, arrays=None):
        name = self.report_writer.report_name()
        summary = dict(summary, experiment=self.config['experiment'], seed=self.config['seed'])
        written = self.report_writer.write_group(name, summary, rows, arrays)
        return written.get('summary') if written else None

    def _run_family(self, basis, support, state_at, exact_at, truth, n_qubits, guarantee, obs_ell):
        """Acquire, recover and score `repetitions` independent runs of one parametrized family."""
        plan = self._plan(basis, support)
        procedure = self._procedure(n_qubits)
        tomo = self.config['tomography']
        obs = local_pauli_list(n_qubits, max(1, min(obs_ell, n_qubits)))
        points = self._grid(basis)
        runs, first = [], None
        for seed in self._repetition_seeds():
            report = recovery.execute_plan(plan, state_at, procedure, seed, (guarantee['gamma'], guarantee['gamma']),
                                           tomo['batches'])
            rows, worst = self._trajectory_error(report, exact_at, points)
            error = recovery.coefficient_error(truth, self._dense_alpha(report), obs, 2)
            runs.append({'max_trajectory_error': worst, 'coefficient_error': error,
                         'violated': error > report.error_budget.total})
            if first is None:
                first = (report, rows)
        report, rows = first
        failures = sum(r['violated'] for r in runs)
        summary = {
            'recovery': report.to_dict(),
            'total_samples': recovery.total_sample_count(plan, procedure),
            'observable_set': {'kind': procedure.obs_set.kind, 'ell': procedure.obs_set.ell},
            'guarantee': guarantee,
            'runs': runs,
            'failure_fraction': failures / len(runs),
            'max_trajectory_error': runs[0]['max_trajectory_error'],
            'within_epsilon': runs[0]['max_trajectory_error'] <= guarantee['bound'],
        }
        if failures:
            logging.warning("%d of %d runs exceeded the error budget.", failures, len(runs))
        logging.info("Max trajectory error %.3e against guarantee %.3e.", summary['max_trajectory_error'],
                     guarantee['bound'])
        return summary, rows, report

    # --- Experiments ---

    def run_nmr(self):
        """Fourier recovery of a sub-Gaussian state evolving under an integer-spectrum Hamiltonian."""
        logging.info("--- Starting NMR Run ---")
        system = self.config['system']
        tomo = self.config['tomography']
        H, rho0, tau = self._nmr_system()
        n = system['n_qubits']
        radius = recovery.subgaussian_support_radius(n, system['sigma'], tau, system['gamma'])
        basis = bos.fourier_basis(H.e_max)
        support = self.config['recovery']['support'] or [k for k in radius.labels() if k in basis.index_set]
        guarantee = {
            'R': radius.R,
            'vacuous': radius.vacuous,
            'tau': tau,
            'gamma': system['gamma'],
            'bound': recovery.nmr_guarantee(system['gamma'], tomo['epsilon']),
        }
        summary, rows, report = self._run_family(
            basis, support, lambda t: qsim.evolve(H, rho0, t), lambda t: qsim.evolve(H, rho0, t),
            qsim.fourier_coefficients(H, rho0), n, guarantee, tomo['ell'],
        )
        path = self._write(summary, rows, report.coefficient_arrays(self.config['numerics']['dense_qubit_cap']))
        logging.info("--- NMR Run Finished ---")
        return {'report': path}

    def run_fermion(self):
        """Chebyshev recovery of a fermionic Gaussian evolution on [-T, T]."""
        logging.info("--- Starting Fermion Run ---")
        system = self.config['system']
        tomo = self.config['tomography']
        H_f, rho0 = self._fermion_system()
        T = system['horizon']
        cutoff = recovery.chebyshev_support_cutoff(H_f.n_modes, system['J'], system['gamma'], T, H_f.F)
        basis = bos.chebyshev_basis(cutoff + 1 + self.config['recovery']['extra_labels'])
        reversal = qsim.time_reversal_conjugation(H_f)
        H = qsim.jordan_wigner(H_f)
        guarantee = {
            'cutoff': cutoff,
            'gamma': system['gamma'],
            'bound': recovery.nmr_guarantee(system['gamma'], tomo['epsilon']),
            'time_reversal_residual': reversal.residual,
            'bare_flip': reversal.bare_flip,
        }
        summary, rows, report = self._run_family(
            basis, list(range(cutoff + 1)),
            lambda x: qsim.evolve_signed(H_f, rho0, x * T, reversal),
            lambda x: qsim.evolve(H, rho0, x * T),
            qsim.chebyshev_coefficients(H, rho0, basis.size - 1, T), H_f.n_modes, guarantee, 1,
        )
        path = self._write(summary, rows, report.coefficient_arrays(self.config['numerics']['dense_qubit_cap']))
        logging.info("--- Fermion Run Finished ---")
        return {'report': path}

    def run_support_id(self):
        """Identify the Fourier support from Pauli probes, then recover on it."""
        logging.info("--- Starting Support Identification Run ---")
        rec = self.config['recovery']
        tomo = self.config['tomography']
        numerics = self.config['numerics']
        H, rho0, _ = self._nmr_system()
        n = self.config['system']['n_qubits']
        basis = bos.fourier_basis(H.e_max)
        s = rec['s'] or self.config['system']['support_size']
        plan = self._plan(basis, list(basis.index_set[:s]))
        point_rng, acquisition_rng, probe_rng, fresh_rng = spawn_rngs(self.config['seed'], 4)
        points = bos.sample_measure(basis, plan.M, point_rng)
        A = bos.build_measurement_matrix(basis, points)
        procedure = self._procedure(n)
        states = [qsim.evolve(H, rho0, x) for x in points]
        observations = recovery.acquire_observations(procedure, states, plan, acquisition_rng)

        L = rec['probes'] or probe_count(basis.size, tomo['delta'], tomo['epsilon'], rec['kappa'])
        estimate = identify_support(observations, A.entries, s, L, probe_rng, strict=rec['strict'],
                                    kappa=rec['kappa'], exhaustive=rec['exhaustive'], batches=tomo['batches'],
                                    labels=basis.index_set, max_iters=numerics['solver_max_iters'],
                                    tol=numerics['solver_tol'])
        if rec['fresh_observations']:
            observations = recovery.acquire_observations(procedure, states, plan, fresh_rng)
        plan = dataclasses.replace(plan, support=tuple(estimate.S))
        report = recovery.recover_sparse(plan, estimate.S, observations, A, batches=tomo['batches'])

        summary = {'support': estimate.to_dict(), 'recovery': report.to_dict()}
        if n <= 4:
            truth = qsim.fourier_coefficients(H, rho0)
            norms_by_label = [normalized_hs_norm(c) for c in truth.coeffs]
            true_S = [truth.support[k] for k in top_s(norms_by_label, s)]
            summary['true_support'] = true_S
            summary['true_norms'] = {str(k): v for k, v in zip(truth.support, norms_by_label)}
            summary['identified'] = list(estimate.S) == true_S
            margin = separability_margin(truth, None, basis.positions(estimate.S), tomo['epsilon'],
                                         D1=numerics['D1'], D2=numerics['D2'])
            summary['separability'] = margin.to_dict()
        path = self._write(summary, arrays=report.coefficient_arrays(self.config['numerics']['dense_qubit_cap']))
        logging.info("--- Support Identification Run Finished ---")
        return {'report': path}

    def run_recover(self):
        """Plain recovery of the configured system; writes the coefficient sidecar."""
        logging.info("--- Starting Recovery Run ---")
        system = self.config['system']
        if system['kind'] == "fermion":
            H_f, rho0 = self._fermion_system()
            T = system['horizon']
            cutoff = recovery.chebyshev_support_cutoff(H_f.n_modes, system['J'], system['gamma'], T, H_f.F)
            basis = bos.chebyshev_basis(cutoff + 1 + self.config['recovery']['extra_labels'])
            reversal = qsim.time_reversal_conjugation(H_f)
            state_at, n, support = (lambda x: qsim.evolve_signed(H_f, rho0, x * T, reversal),
                                    H_f.n_modes, list(range(cutoff + 1)))
        else:
            H, rho0, tau = self._nmr_system()
            n = system['n_qubits']
            basis = bos.fourier_basis(H.e_max)
            radius = recovery.subgaussian_support_radius(n, system['sigma'], tau, system['gamma'])
            support = [k for k in radius.labels() if k in basis.index_set]
            state_at = lambda t: qsim.evolve(H, rho0, t)
        support = self.config['recovery']['support'] or support
        plan = self._plan(basis, support)
        procedure = self._procedure(n)
        report = recovery.execute_plan(plan, state_at, procedure, self.config['seed'],
                                       batches=self.config['tomography']['batches'])
        summary = {'recovery': report.to_dict(), 'total_samples': recovery.total_sample_count(plan, procedure)}
        path = self._write(summary, arrays=report.coefficient_arrays(self.config['numerics']['dense_qubit_cap']))
        logging.info("--- Recovery Run Finished ---")
        return {'report': path}

    def run_predict(self):
        """Evaluates the configured observables on a grid from a stored coefficient sidecar."""
        logging.info("--- Starting Prediction Run ---")
        source = self.config['recovery']['coefficients']
        if not source:
            raise ConfigError("Prediction needs a coefficient sidecar", "recovery.coefficients")
        alpha = load_coefficients(source)
        points = self._grid(alpha.basis)
        rows = []
        for observable_id, O in self.config['observables'].items():
            values = np.real(alpha.trajectory(O, points))
            rows.extend({'x': float(x), 'observable_id': observable_id, 'estimate': float(v), 'stderr': None}
                        for x, v in zip(points, values))
        summary = {'source': os.path.basename(source), 'grid_points': len(points),
                   'observables': sorted(self.config['observables'])}
        path = self._write(summary, rows=rows)
        logging.info("--- Prediction Run Finished ---")
        return {'report': path}

    def run_audit(self):
        """Runs every named check and records each outcome in the ledger."""
        logging.info("--- Starting Audit ---")
        results = run_checks(self.config)
        if self.ledger and self.run_id is not None:
            for result in results:
                self.ledger.add_check(self.run_id, result.check_id, result.passed, result.detail)
        failed = [r.check_id for r in results if not r.passed]
        summary = {'checks': [r.to_dict() for r in results], 'failed': failed, 'passed': not failed}
        path = self._write(summary)
        if failed:
            logging.error("%d of %d checks failed: %s", len(failed), len(results), ", ".join(failed))
        else:
            logging.info("All %d checks passed.", len(results))
        logging.info("--- Audit Finished ---")
        return {'report': path, 'passed': not failed}
