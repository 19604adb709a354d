# paratomo/tomo/shadows.py
"""
Local-Clifford classical shadows.

Each snapshot measures every qubit in a uniformly random X, Y or Z eigenbasis.
Basis indices are stored as 0 = X, 1 = Y, 2 = Z; an outcome bit 1 means the -1
eigenvalue.

Serialized forms (format version 1):

* JSON: {"format": "paratomo-shadow", "version": 1, "n_qubits": n,
  "snapshots": [{"bases": "XZY", "bits": mask}, ...]} where bit q of `mask`
  is the outcome on qubit q.
* Binary: b"PTSH", version (u8), n_qubits (u16 LE), snapshot count (u32 LE),
  then T*n basis bytes followed by T rows of np.packbits outcome bytes.
"""
import json
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError
from ..norms import local_ball
from ..qsim import check_qubits, kron_all
from .base import TomographicProcedure

BASIS_LETTERS = "XYZ"
SHADOW_CONSTANT = 34
SHADOW_FORMAT_VERSION = 1
_MAGIC = b"PTSH"
_HEADER = struct.Struct("<4sBHI")

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S_DAG = np.diag([1, -1j])
# Unitaries taking each measurement eigenbasis to the computational basis.
ROTATIONS = (_HADAMARD, _HADAMARD @ _S_DAG, np.eye(2, dtype=complex))


def _snapshot_factor(basis, bit):
    """3 U^dagger |b><b| U - I for one qubit."""
    U = ROTATIONS[basis]
    ket = U.conj().T[:, bit]
    return 3.0 * np.outer(ket, ket.conj()) - np.eye(2)


def _pauli_support(label, n_qubits):
    label = label.upper()
    if len(label) != n_qubits or any(c not in "IXYZ" for c in label):
        raise ArgumentError(f"'{label}' is not an {n_qubits}-qubit Pauli word.")
    support = [q for q, c in enumerate(label) if c != "I"]
    return support, np.array([BASIS_LETTERS.index(label[q]) for q in support], dtype=np.uint8)


@dataclass
class ShadowData:
    """Snapshots of one state: per-qubit basis indices and outcome bits."""

    n_qubits: int
    bases: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self):
        self.bases = np.asarray(self.bases, dtype=np.uint8).reshape(-1, self.n_qubits)
        self.outcomes = np.asarray(self.outcomes, dtype=np.uint8).reshape(-1, self.n_qubits)
        if self.bases.shape != self.outcomes.shape:
            raise ArgumentError("Every snapshot needs exactly one basis index and one bit per qubit.")
        if self.bases.size and self.bases.max() > 2:
            raise ArgumentError("Basis indices must be 0 (X), 1 (Y) or 2 (Z).")
        if self.outcomes.size and self.outcomes.max() > 1:
            raise ArgumentError("Outcomes must be bits.")

    def __len__(self):
        return self.bases.shape[0]

    @property
    def copies(self):
        return len(self)

    def subset(self, indices):
        return ShadowData(self.n_qubits, self.bases[indices], self.outcomes[indices])

    def snapshot_values(self, label):
        """Single-snapshot estimates 3^|supp| prod(+-1) on basis match, 0 otherwise."""
        support, target = _pauli_support(label, self.n_qubits)
        if not support:
            return np.ones(len(self))
        match = np.all(self.bases[:, support] == target, axis=1)
        signs = np.prod(1 - 2 * self.outcomes[:, support].astype(np.int64), axis=1)
        return np.where(match, (3.0 ** len(support)) * signs, 0.0)

    def expectation(self, label, batches=1):
        return shadow_expectation(self, label, batches)

    def dense(self, max_qubits=10):
        """Shadow reconstruction mean_j (x)_q (3 U_q^dagger |b_q><b_q| U_q - I)."""
        check_qubits(self.n_qubits, max_qubits)
        if not len(self):
            raise ArgumentError("Cannot reconstruct a state from an empty shadow.")
        factors = [[_snapshot_factor(b, o) for o in (0, 1)] for b in range(3)]
        codes = 2 * self.bases.astype(np.int64) + self.outcomes
        rows, counts = np.unique(codes, axis=0, return_counts=True)
        d = 2 ** self.n_qubits
        rho = np.zeros((d, d), dtype=complex)
        for row, count in zip(rows, counts):
            rho += count * kron_all([factors[c // 2][c % 2] for c in row])
        return rho / len(self)

    def to_dict(self):
        weights = 1 << np.arange(self.n_qubits)
        masks = self.outcomes.astype(np.int64) @ weights
        return {
            "format": "paratomo-shadow",
            "version": SHADOW_FORMAT_VERSION,
            "n_qubits": self.n_qubits,
            "snapshots": [
                {"bases": "".join(BASIS_LETTERS[b] for b in row), "bits": int(mask)}
                for row, mask in zip(self.bases, masks)
            ],
        }

    @classmethod
    def from_dict(cls, payload):
        if payload.get("format") != "paratomo-shadow" or payload.get("version") != SHADOW_FORMAT_VERSION:
            raise ArgumentError("Unsupported shadow record format or version.")
        n = int(payload["n_qubits"])
        snaps = payload["snapshots"]
        bases = np.array([[BASIS_LETTERS.index(c) for c in s["bases"]] for s in snaps], dtype=np.uint8)
        outcomes = np.array([[(s["bits"] >> q) & 1 for q in range(n)] for s in snaps], dtype=np.uint8)
        return cls(n, bases.reshape(-1, n), outcomes.reshape(-1, n))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_bytes(self):
        header = _HEADER.pack(_MAGIC, SHADOW_FORMAT_VERSION, self.n_qubits, len(self))
        packed = np.packbits(self.outcomes, axis=1) if len(self) else np.zeros((0, 0), dtype=np.uint8)
        return header + self.bases.tobytes() + packed.tobytes()

    @classmethod
    def from_bytes(cls, blob):
        magic, version, n, count = _HEADER.unpack_from(blob)
        if magic != _MAGIC or version != SHADOW_FORMAT_VERSION:
            raise ArgumentError("Unsupported shadow record format or version.")
        offset = _HEADER.size
        bases = np.frombuffer(blob, dtype=np.uint8, count=count * n, offset=offset).reshape(count, n)
        offset += count * n
        width = (n + 7) // 8
        packed = np.frombuffer(blob, dtype=np.uint8, count=count * width, offset=offset).reshape(count, width)
        outcomes = np.unpackbits(packed, axis=1, count=n)
        return cls(n, bases.copy(), outcomes)


def shadow_expectation(data, label, median_of_means_batches=1):
    """Median over `median_of_means_batches` contiguous batch means of the snapshot estimates."""
    values = data.snapshot_values(label)
    if not len(values):
        raise ArgumentError("Empty shadow.")
    k = min(max(int(median_of_means_batches), 1), len(values))
    return float(np.median([chunk.mean() for chunk in np.array_split(values, k)]))


def mom_batches(delta, n_observables=1):
    """Batch count 2 ln(2m/delta) for m simultaneously estimated observables."""
    return max(1, math.ceil(2.0 * math.log(2.0 * n_observables / delta)))


def _check_budget_args(epsilon, delta, n, ell):
    if epsilon <= 0 or delta <= 0 or n <= 0 or ell < 0:
        raise ArgumentError("Shadow budgets need positive epsilon, delta, n and ell >= 0.")


def shadow_sample_count(epsilon, delta, n, ell, c0=SHADOW_CONSTANT):
    """
    T = ceil(c0 ell 12^ell / epsilon^2 ln(n/delta)) local-Clifford snapshots;
    ell = 0 keeps only the ln(n/delta)/epsilon^2 scaling.
    """
    _check_budget_args(epsilon, delta, n, ell)
    return math.ceil(c0 * max(ell, 1) * 12 ** ell / epsilon ** 2 * math.log(n / delta))


def fermionic_shadow_sample_count(epsilon, delta, n, ell, c0=SHADOW_CONSTANT):
    """
    T = ceil(c0 n^ell ell^(3/2) / epsilon^2 ln(n/delta)) for matchgate shadows.

    Budget formula only: no fermionic shadow procedure is implemented, runs
    use local-Clifford shadows.
    """
    _check_budget_args(epsilon, delta, n, ell)
    return math.ceil(c0 * n ** ell * max(ell, 1) ** 1.5 / epsilon ** 2 * math.log(n / delta))


def shadow_norm_bound(observable, ell=None):
    """4^ell ||O||_inf^2; a Pauli word has unit norm and its weight as default locality."""
    if isinstance(observable, str):
        support, _ = _pauli_support(observable, len(observable))
        ell = len(support) if ell is None else ell
        return 4.0 ** ell
    if ell is None:
        raise ArgumentError("Locality ell is required for matrix observables.")
    return 4.0 ** ell * float(np.linalg.norm(np.asarray(observable), 2)) ** 2


def measurement_probabilities(rho, setting):
    """Outcome distribution of rho measured in the product basis `setting`."""
    n = len(setting)
    t = np.asarray(rho).reshape([2] * (2 * n))
    for q, b in enumerate(setting):
        U = ROTATIONS[int(b)]
        t = np.moveaxis(np.tensordot(U, t, axes=([1], [q])), 0, q)
        t = np.moveaxis(np.tensordot(U.conj(), t, axes=([1], [n + q])), 0, n + q)
    d = 2 ** n
    probs = np.clip(np.real(np.diagonal(t.reshape(d, d))), 0.0, None)
    return probs / probs.sum()


class LocalCliffordShadows(TomographicProcedure):
    """Random single-qubit Pauli-basis measurements."""

    kind = "shadows"

    def __init__(self, n_qubits, ell=2, snapshots=None, c0=SHADOW_CONSTANT):
        """
        :param n_qubits: Number of qubits of the measured states.
        :param ell: Locality of the observables the guarantee covers.
        :param snapshots: Fixed snapshot count; derived from (epsilon, delta) when None.
        :param c0: Constant of the snapshot-count formula.
        """
        super().__init__(n_qubits)
        self.ell = int(ell)
        self.snapshots = snapshots
        self.c0 = c0

    @property
    def obs_set(self):
        return local_ball(self.n_qubits, max(1, min(self.ell, self.n_qubits)))

    def sample_count(self, epsilon, delta):
        if self.snapshots:
            return int(self.snapshots)
        return shadow_sample_count(epsilon, delta, self.n_qubits, self.ell, self.c0)

    def _measure(self, rho, epsilon, delta, rng):
        n = self.n_qubits
        count = self.sample_count(epsilon, delta)
        bases = rng.integers(0, 3, size=(count, n), dtype=np.uint8)
        outcomes = np.zeros((count, n), dtype=np.uint8)
        codes = bases.astype(np.int64) @ (3 ** np.arange(n))
        shifts = n - 1 - np.arange(n)
        for code in np.unique(codes):
            rows = np.nonzero(codes == code)[0]
            probs = measurement_probabilities(rho, bases[rows[0]])
            draws = rng.choice(probs.size, size=rows.size, p=probs)
            outcomes[rows] = (draws[:, None] >> shifts[None, :]) & 1
        logging.debug("Collected %d shadow snapshots on %d qubits.", count, n)
        return ShadowData(n, bases, outcomes)
