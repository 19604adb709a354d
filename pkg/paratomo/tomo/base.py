# paratomo/tomo/base.py
import logging

import numpy as np

from ..errors import ArgumentError
from ..qsim import as_matrix, num_qubits, pauli_word


def check_accuracy(epsilon, delta):
    if not 0 < epsilon < 1:
        raise ArgumentError(f"epsilon must lie in (0, 1), got {epsilon!r}.")
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta!r}.")


class DenseEstimate:
    """A state estimate held as a dense matrix."""

    def __init__(self, matrix, copies=0):
        """
        :param matrix: The estimated density matrix.
        :param copies: Number of state copies consumed (0 for the exact oracle).
        """
        self.matrix = np.asarray(matrix, dtype=complex)
        self.copies = int(copies)

    @property
    def n_qubits(self):
        return num_qubits(self.matrix.shape[0])

    def expectation(self, observable):
        """Tr[O rho_hat] for a Pauli word or an explicit matrix."""
        O = pauli_word(observable) if isinstance(observable, str) else np.asarray(observable)
        return float(np.real(np.sum(O.T * self.matrix)))

    def dense(self):
        return self.matrix


class TomographicProcedure:
    """
    Base class of a procedure returning rho_hat with
    P[||rho - rho_hat||_O <= epsilon] >= 1 - delta from sample_count copies.
    """

    kind = None

    def __init__(self, n_qubits):
        self.n_qubits = int(n_qubits)

    @property
    def obs_set(self):
        raise NotImplementedError

    def sample_count(self, epsilon, delta):
        raise NotImplementedError

    def _measure(self, rho, epsilon, delta, rng):
        raise NotImplementedError

    def acquire(self, rho, epsilon, delta, rng):
        check_accuracy(epsilon, delta)
        m = as_matrix(rho)
        if m.shape != (2 ** self.n_qubits, 2 ** self.n_qubits):
            raise ArgumentError(f"State of shape {m.shape} does not match a {self.n_qubits}-qubit {self.kind} procedure.")
        estimate = self._measure(m, epsilon, delta, rng)
        logging.debug("%s acquisition finished (%d copies).", self.kind, estimate.copies)
        return estimate
