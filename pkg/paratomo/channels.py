# paratomo/channels.py
"""
Parametrized quantum channels.

Superoperators act on column-stacked vectorizations: vec(rho) stacks the
columns of rho, so vec(K rho K^dagger) = (conj(K) (x) K) vec(rho).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import bos
from .errors import ArgumentError
from .qsim import all_pauli_labels, as_matrix, check_qubits, kron_all, num_qubits, pauli_word
from .recovery import RecoveryReport, recover_sparse
from .tomo import acquire
from .utils import make_rng, spawn_rngs

CHANNEL_QUBIT_CAP = 3


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v):
    v = np.asarray(v)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ArgumentError(f"A vector of length {v.size} is not a vectorized square matrix.")
    return v.reshape(d, d, order="F")


def superoperator_from_kraus(kraus):
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    return sum(np.kron(K.conj(), K) for K in kraus)


def channel_apply(C, rho):
    """C[rho] for a superoperator matrix C."""
    C = np.asarray(C)
    rho = as_matrix(rho)
    if C.shape != (rho.size, rho.size):
        raise ArgumentError(f"Superoperator of shape {C.shape} cannot act on a {rho.shape} operator.")
    return unvec(C @ vec(rho))


def apply_extended(C, rho, ancilla_dim):
    """(I (x) C)[rho] for rho on ancilla (x) system, the ancilla being the left factor."""
    rho = as_matrix(rho)
    d = math.isqrt(np.asarray(C).shape[0])
    if rho.shape != (ancilla_dim * d, ancilla_dim * d):
        raise ArgumentError(f"State of shape {rho.shape} does not live on a {ancilla_dim} x {d} system.")
    blocks = rho.reshape(ancilla_dim, d, ancilla_dim, d)
    out = np.empty_like(blocks)
    for a in range(ancilla_dim):
        for b in range(ancilla_dim):
            out[a, :, b, :] = channel_apply(C, blocks[a, :, b, :])
    return out.reshape(rho.shape)


def maximally_entangled_state(d):
    omega = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    return np.outer(omega, omega.conj())


def choi_state(C):
    """(I (x) C)[|Omega><Omega|] with |Omega> = sum_i |ii> / sqrt(d)."""
    d = math.isqrt(np.asarray(C).shape[0])
    return apply_extended(C, maximally_entangled_state(d), d)


def pauli_transfer_probe(C, P, Q, route="direct"):
    """
    2^-n Tr[Q C[P]].

    The Choi route reads Tr[J(C) (conj(P) (x) Q)]; the conjugate on the
    ancilla factor undoes the transpose that |Omega> introduces.
    """
    if len(P) != len(Q):
        raise ArgumentError(f"Pauli words '{P}' and '{Q}' act on different numbers of qubits.")
    Pm, Qm = pauli_word(P), pauli_word(Q)
    if np.asarray(C).shape[0] != Pm.size:
        raise ArgumentError("Superoperator and Pauli words act on different dimensions.")
    if route == "direct":
        return float(np.real(np.trace(Qm @ channel_apply(C, Pm)))) / Pm.shape[0]
    if route == "choi":
        return float(np.real(np.trace(choi_state(C) @ np.kron(Pm.conj(), Qm))))
    raise ArgumentError(f"Unknown probe route '{route}'.")


def pauli_transfer_matrix(C):
    """R[Q, P] = 2^-n Tr[Q C[P]] over all Pauli words in lexicographic order."""
    d = math.isqrt(np.asarray(C).shape[0])
    labels = all_pauli_labels(num_qubits(d))
    return np.array([[pauli_transfer_probe(C, P, Q) for P in labels] for Q in labels])


def is_cptp(C, tol=1e-8):
    """Choi state positive semi-definite with unit-trace-preserving partial trace."""
    J = choi_state(C)
    d = math.isqrt(np.asarray(C).shape[0])
    if np.linalg.norm(J - J.conj().T) > tol:
        return False
    if np.linalg.eigvalsh((J + J.conj().T) / 2).min() < -tol:
        return False
    ancilla = np.einsum("aibi->ab", J.reshape(d, d, d, d))
    return bool(np.allclose(ancilla, np.eye(d) / d, atol=tol))


def tester_seminorm(C, testers):
    """
    max |Tr[(I (x) C)[rho] O]| over explicit (rho, O) tester pairs.

    The ancilla dimension of each pair is read off the state; the supremum over
    all testers is not computed.
    """
    if not testers:
        raise ArgumentError("tester_seminorm needs at least one (state, observable) pair.")
    d = math.isqrt(np.asarray(C).shape[0])
    best = 0.0
    for rho, O in testers:
        rho = as_matrix(rho)
        ancilla_dim, rem = divmod(rho.shape[0], d)
        if rem:
            raise ArgumentError(f"Tester state of dimension {rho.shape[0]} is not a multiple of {d}.")
        out = apply_extended(C, rho, ancilla_dim)
        best = max(best, abs(np.sum(np.asarray(O).T * out)))
    return float(best)


def identity_channel(n_qubits):
    return np.eye(4 ** n_qubits, dtype=complex)


def depolarizing_channel(n_qubits, p=1.0):
    """rho -> (1 - p) rho + p Tr[rho] I / d."""
    if not 0 <= p <= 1:
        raise ArgumentError(f"Depolarizing strength must lie in [0, 1], got {p!r}.")
    d = 2 ** n_qubits
    replace = np.outer(vec(np.eye(d) / d), vec(np.eye(d)))
    return (1 - p) * identity_channel(n_qubits) + p * replace


def unitary_channel(U):
    return superoperator_from_kraus([U])


def hamiltonian_channel(H, t):
    """Conjugation by exp(-i H t)."""
    return unitary_channel(scipy.linalg.expm(-1j * t * np.asarray(H, dtype=complex)))


def z_rotation_channel(theta):
    """rho -> exp(-i theta Z / 2) rho exp(i theta Z / 2)."""
    return unitary_channel(np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]))


def z_rotation_fourier_coefficients():
    """Superoperator Fourier coefficients of z_rotation_channel, labels -1, 0, 1."""
    return {
        -1: np.diag([0, 1, 0, 0]).astype(complex),
        0: np.diag([1, 0, 0, 1]).astype(complex),
        1: np.diag([0, 0, 1, 0]).astype(complex),
    }


def random_channel(n_qubits, rng_seed=None, kraus_rank=None):
    """Random CPTP map from a Haar-like Stinespring isometry V: C^d -> C^(d r)."""
    check_qubits(n_qubits, CHANNEL_QUBIT_CAP)
    rng = make_rng(rng_seed)
    d = 2 ** n_qubits
    r = kraus_rank or d * d
    G = rng.normal(size=(d * r, d)) + 1j * rng.normal(size=(d * r, d))
    V, R = np.linalg.qr(G)
    V = V * (np.diag(R) / np.abs(np.diag(R)))
    return superoperator_from_kraus([V[a * d:(a + 1) * d, :] for a in range(r)])


@dataclass
class ParametrizedChannel:
    """Superoperator coefficients sum_k A_k phi_k(x) on n qubits."""

    basis: bos.BasisSystem
    support: tuple
    coeffs: list = field(repr=False)

    def __post_init__(self):
        self.support = tuple(int(k) for k in self.support)
        self.coeffs = [np.asarray(c, dtype=complex) for c in self.coeffs]
        if len(self.coeffs) != len(self.support):
            raise ArgumentError(f"{len(self.coeffs)} superoperators for {len(self.support)} labels.")
        d2 = self.coeffs[0].shape[0]
        if math.isqrt(d2) ** 2 != d2:
            raise ArgumentError("Superoperators must act on vectorized square matrices.")

    @property
    def n_qubits(self):
        return num_qubits(math.isqrt(self.coeffs[0].shape[0]))

    def coefficient(self, k):
        return self.coeffs[self.support.index(int(k))]

    def evaluate(self, x):
        phi = self.basis.evaluate(self.support, [x])[0]
        return np.tensordot(phi, np.stack(self.coeffs), axes=1)

    def apply(self, x, rho):
        return channel_apply(self.evaluate(x), rho)

    @classmethod
    def from_operator(cls, op):
        return cls(op.basis, op.support, op.coeffs)


def channel_tomography(C, procedure, epsilon, delta, rng_seed=None):
    """
    Estimates the superoperator of C from product inputs of |0>, |1>, |+>, |+i>
    measured with a state procedure, inverting vec(out_j) = C vec(in_j).
    """
    d = math.isqrt(np.asarray(C).shape[0])
    n = num_qubits(d)
    check_qubits(n, CHANNEL_QUBIT_CAP)
    singles = [
        np.array([1, 0], dtype=complex),
        np.array([0, 1], dtype=complex),
        np.array([1, 1], dtype=complex) / math.sqrt(2),
        np.array([1, 1j], dtype=complex) / math.sqrt(2),
    ]
    inputs = []
    for code in range(4 ** n):
        digits = [(code >> (2 * (n - 1 - q))) & 3 for q in range(n)]
        psi = kron_all([singles[c] for c in digits])
        inputs.append(np.outer(psi, psi.conj()))
    rngs = spawn_rngs(rng_seed, len(inputs))
    per_input = delta / len(inputs)
    outputs = []
    for rho, rng in zip(inputs, rngs):
        estimate = acquire(procedure, channel_apply(C, rho), epsilon, per_input, rng)
        outputs.append(estimate.dense() if hasattr(estimate, "dense") else as_matrix(estimate))
    IN = np.stack([vec(rho) for rho in inputs], axis=1)
    OUT = np.stack([vec(rho) for rho in outputs], axis=1)
    return OUT @ np.linalg.inv(IN)


def recover_channel(plan, channel_observations, A, gammas=(0.0, 0.0)):
    """
    Sparse recovery with superoperator-valued observations.

    The returned report carries a ParametrizedChannel and the `channel` flag.
    """
    superops = [np.asarray(C, dtype=complex) for C in channel_observations]
    report = recover_sparse(plan, plan.labels, superops, A, gammas)
    channel = ParametrizedChannel.from_operator(report.alpha_hat)
    diagnostics = dict(report.diagnostics, channel=True)
    logging.info("Recovered a parametrized channel on %d qubits with %d coefficients.", channel.n_qubits, len(channel.support))
    return RecoveryReport(channel, plan, report.error_budget, diagnostics, report.pinv, report.matrix, report.observations)
