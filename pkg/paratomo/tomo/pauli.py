# paratomo/tomo/pauli.py
import logging
import math

import numpy as np

from ..norms import trace_ball
from ..qsim import all_pauli_labels, check_qubits, hermitian_part, pauli_word
from .base import DenseEstimate, TomographicProcedure


def project_to_states(matrix):
    """Clips negative eigenvalues and renormalizes to unit trace."""
    vals, vecs = np.linalg.eigh(hermitian_part(matrix))
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0:
        d = matrix.shape[0]
        return np.eye(d, dtype=complex) / d
    vals = vals / vals.sum()
    return (vecs * vals) @ vecs.conj().T


class FullPauliTomography(TomographicProcedure):
    """
    Estimates every non-identity Pauli expectation from projective +-1
    measurements and inverts the Pauli expansion.

    The linear-inversion estimate is projected onto the state set by eigenvalue
    clipping followed by renormalization.
    """

    kind = "pauli"

    def __init__(self, n_qubits, shots_per_pauli=None):
        """
        :param n_qubits: Number of qubits of the measured states.
        :param shots_per_pauli: Fixed shot count per Pauli word; derived from (epsilon, delta) when None.
        """
        super().__init__(n_qubits)
        check_qubits(self.n_qubits)
        self.shots_per_pauli = shots_per_pauli
        self.labels = all_pauli_labels(self.n_qubits)[1:]

    @property
    def obs_set(self):
        return trace_ball(self.n_qubits)

    def shots_for(self, epsilon, delta):
        """Hoeffding shots per Pauli so that sum_P (c_P - c_hat_P)^2 <= epsilon^2 with probability 1 - delta."""
        if self.shots_per_pauli:
            return int(self.shots_per_pauli)
        m = len(self.labels)
        return math.ceil(2.0 * m * math.log(2.0 * m / delta) / epsilon ** 2)

    def sample_count(self, epsilon, delta):
        return len(self.labels) * self.shots_for(epsilon, delta)

    def _measure(self, rho, epsilon, delta, rng):
        shots = self.shots_for(epsilon, delta)
        d = rho.shape[0]
        estimate = np.eye(d, dtype=complex) / d
        for label in self.labels:
            P = pauli_word(label)
            mean = float(np.clip(np.real(np.sum(P.T * rho)), -1.0, 1.0))
            plus = rng.binomial(shots, 0.5 * (1.0 + mean))
            estimate += (2.0 * plus / shots - 1.0) * P / d
        logging.debug("Pauli tomography used %d shots for each of %d words.", shots, len(self.labels))
        return DenseEstimate(project_to_states(estimate), copies=shots * len(self.labels))
