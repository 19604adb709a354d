# paratomo/qsim.py
"""
Dense small-system quantum simulation.

Qubit 0 is the leftmost tensor factor (most significant bit of a
computational basis index). Majorana operators follow the convention
{gamma_i, gamma_j} = 2 delta_ij, realized through Jordan-Wigner as
gamma_j = Z...Z X I...I and gamma_{n+j} = Z...Z Y I...I (j zero-based). With
this convention a quadratic Hamiltonian H = i sum_ij F_ij gamma_i gamma_j has
||H||_inf = ||F||_1 and mode energies lambda_j = 2 mu_j, where +-i mu_j are the
eigenvalues of F.
"""
import logging
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from .errors import ArgumentError, GuardExceededError
from .utils import make_rng

DENSE_QUBIT_CAP = 10
FERMION_MODE_CAP = 6

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def check_qubits(n_qubits, max_qubits=DENSE_QUBIT_CAP):
    if n_qubits > max_qubits:
        raise GuardExceededError(f"{n_qubits} qubits exceed the dense simulation cap of {max_qubits}.")


def num_qubits(dim):
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 0 or 2 ** n != dim:
        raise ArgumentError(f"Dimension {dim} is not a power of two.")
    return n


def kron_all(factors):
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


def pauli_word(label):
    """Dense matrix of a Pauli word such as 'XIZ'."""
    try:
        return kron_all([PAULIS[c] for c in label.upper()])
    except KeyError:
        raise ArgumentError(f"'{label}' is not a Pauli word.") from None


def all_pauli_labels(n_qubits):
    """All 4^n Pauli words in lexicographic I < X < Y < Z order."""
    labels = [""]
    for _ in range(n_qubits):
        labels = [w + c for w in labels for c in "IXYZ"]
    return labels


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m):
    return 0.5 * (m + dagger(m))


def trace_norm(m):
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(m), compute_uv=False).sum())


def expectation(rho, observable):
    return complex(np.trace(np.asarray(observable) @ as_matrix(rho)))


def as_matrix(rho):
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


@dataclass
class DensityOperator:
    """A valid n-qubit quantum state."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ArgumentError("A density operator must be a square matrix.")
        num_qubits(self.matrix.shape[0])

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def n_qubits(self):
        return num_qubits(self.dim)

    def validate(self, herm_tol=1e-12, trace_tol=1e-12, psd_tol=1e-10):
        """Raises ArgumentError unless the matrix is Hermitian, unit trace and PSD."""
        m = self.matrix
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - dagger(m)).max() > herm_tol * scale:
            raise ArgumentError("Density operator is not Hermitian.")
        if abs(np.trace(m) - 1.0) > trace_tol:
            raise ArgumentError(f"Density operator has trace {np.trace(m).real:.3e}, expected 1.")
        if np.linalg.eigvalsh(hermitian_part(m)).min() < -psd_tol:
            raise ArgumentError("Density operator has a negative eigenvalue.")
        return self


def pure_state(vector):
    v = np.asarray(vector, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityOperator(np.outer(v, v.conj()))


def product_state(single_qubit_vectors):
    return pure_state(reduce(np.kron, [np.asarray(v, dtype=complex) for v in single_qubit_vectors]))


def plus_state(n_qubits):
    return product_state([np.array([1, 1]) / math.sqrt(2)] * n_qubits)


def haar_vector(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density_matrix(n_qubits, rng_seed=None, rank=None):
    """Random state from the induced (Ginibre) measure."""
    rng = make_rng(rng_seed)
    d = 2 ** n_qubits
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = g @ dagger(g)
    return DensityOperator(m / np.trace(m).real)


def random_hermitian(n_qubits, rng_seed=None):
    rng = make_rng(rng_seed)
    d = 2 ** n_qubits
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return hermitian_part(g)


@dataclass
class IntegerSpectrumHamiltonian:
    """Diagonal Hamiltonian with integer energies in [0, e_max] (NMR type)."""

    n_qubits: int
    diagonal: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diagonal)
        if diag.size == 0:
            raise ArgumentError("Empty spectrum.")
        if diag.size != 2 ** self.n_qubits:
            raise ArgumentError(f"Expected {2 ** self.n_qubits} energies, got {diag.size}.")
        if not np.all(np.equal(np.mod(diag, 1), 0)):
            raise ArgumentError("All energies must be integers.")
        if diag.min() < 0:
            raise ArgumentError("Energies must be non-negative.")
        self.diagonal = diag.astype(np.int64)

    @property
    def e_max(self):
        return int(self.diagonal.max())

    @property
    def matrix(self):
        return np.diag(self.diagonal.astype(complex))

    @property
    def energies(self):
        return sorted(set(int(e) for e in self.diagonal))


def nmr_hamiltonian(n_qubits, fields=None, couplings=None):
    """
    H = sum_j w_j n_j + sum_{i<j} J_ij n_i n_j with integer weights, where
    n_j = (1 - Z_j)/2 is the excitation number of qubit j.

    :param fields: Integer per-qubit weights (default all 1).
    :param couplings: Mapping {(i, j): J_ij} of non-negative integer couplings.
    """
    fields = [1] * n_qubits if fields is None else list(fields)
    couplings = couplings or {}
    idx = np.arange(2 ** n_qubits)
    bits = (idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1
    diag = bits @ np.asarray(fields, dtype=np.int64)
    for (i, j), w in couplings.items():
        diag = diag + int(w) * bits[:, i] * bits[:, j]
    return IntegerSpectrumHamiltonian(n_qubits, diag)


@dataclass
class FermionicGaussianHamiltonian:
    """H = i sum_ij F_ij gamma_i gamma_j with real skew-symmetric F (2n x 2n)."""

    n_modes: int
    F: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        if F.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise ArgumentError(f"F must be {2 * self.n_modes}x{2 * self.n_modes}.")
        if not np.array_equal(F, -F.T):
            raise ArgumentError("F must be exactly skew-symmetric.")
        self.F = F

    @property
    def J(self):
        return float(np.abs(self.F).max())

    @property
    def matrix(self):
        return jordan_wigner(self)


def random_fermionic_hamiltonian(n_modes, J=1.0, rng_seed=None):
    """Skew-symmetric F with entries uniform in [-J, J] and max |F_ij| = J."""
    rng = make_rng(rng_seed)
    upper = np.triu(rng.uniform(-J, J, size=(2 * n_modes, 2 * n_modes)), 1)
    if np.abs(upper).max() > 0:
        upper *= J / np.abs(upper).max()
    return FermionicGaussianHamiltonian(n_modes, upper - upper.T)


def on_site_fermionic_hamiltonian(energies):
    """Particle-preserving H with on-site energies only: F couples gamma_j and gamma_{n+j}."""
    n = len(energies)
    F = np.zeros((2 * n, 2 * n))
    for j, e in enumerate(energies):
        F[j, n + j] = e / 2.0
        F[n + j, j] = -e / 2.0
    return FermionicGaussianHamiltonian(n, F)


def majorana_operators(n_modes):
    """The 2n Jordan-Wigner Majorana matrices, positions first then momenta."""
    ops = []
    for kind in (X, Y):
        for j in range(n_modes):
            ops.append(kron_all([Z] * j + [kind] + [I2] * (n_modes - j - 1)))
    return ops


def jordan_wigner(H_f, max_modes=FERMION_MODE_CAP):
    """Dense qubit Hamiltonian of a fermionic Gaussian Hamiltonian."""
    if H_f.n_modes > max_modes:
        raise GuardExceededError(f"{H_f.n_modes} modes exceed the dense fermion cap of {max_modes}.")
    gammas = majorana_operators(H_f.n_modes)
    d = 2 ** H_f.n_modes
    H = np.zeros((d, d), dtype=complex)
    rows, cols = np.nonzero(H_f.F)
    for i, j in zip(rows, cols):
        H += 1j * H_f.F[i, j] * (gammas[i] @ gammas[j])
    return hermitian_part(H)


def mode_energies(F):
    """lambda_j = 2 mu_j where +-i mu_j are the eigenvalues of F."""
    mu = np.linalg.eigvalsh(1j * np.asarray(F, dtype=float))
    n = len(mu) // 2
    return 2.0 * np.sort(mu)[n:]


def predicted_spectrum(F):
    """Sorted multiset {+-lambda_1 +- ... +- lambda_n}."""
    lam = mode_energies(F)
    values = np.zeros(1)
    for l in lam:
        values = np.concatenate([values + l, values - l])
    return np.sort(values)


@dataclass
class SpectralDecomposition:
    """H = sum_e e Pi_e over distinct eigenvalues."""

    energies: list
    projectors: list

    def check(self, tol=1e-10):
        d = self.projectors[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for a, Pa in enumerate(self.projectors):
            total += Pa
            if np.abs(Pa @ Pa - Pa).max() > tol:
                return False
            for Pb in self.projectors[a + 1:]:
                if np.abs(Pa @ Pb).max() > tol:
                    return False
        return np.abs(total - np.eye(d)).max() <= tol


def hamiltonian_matrix(H):
    if isinstance(H, (IntegerSpectrumHamiltonian, FermionicGaussianHamiltonian)):
        return H.matrix
    return np.asarray(H, dtype=complex)


def spectral_decomposition(H, tol=1e-8):
    """Groups eigenvalues closer than `tol` into one eigenspace."""
    if isinstance(H, IntegerSpectrumHamiltonian):
        energies = H.energies
        projectors = [np.diag((H.diagonal == e).astype(complex)) for e in energies]
        return SpectralDecomposition(energies, projectors)
    vals, vecs = np.linalg.eigh(hamiltonian_matrix(H))
    groups = [[0]]
    for a in range(1, len(vals)):
        if vals[a] - vals[groups[-1][0]] <= tol:
            groups[-1].append(a)
        else:
            groups.append([a])
    energies = [float(np.mean(vals[g])) for g in groups]
    projectors = [vecs[:, g] @ dagger(vecs[:, g]) for g in groups]
    return SpectralDecomposition(energies, projectors)


def evolve(H, rho0, t):
    """rho(t) = exp(-iHt) rho0 exp(iHt) via eigendecomposition."""
    rho = as_matrix(rho0)
    Hm = hamiltonian_matrix(H)
    if Hm.shape != rho.shape:
        raise ArgumentError(f"Hamiltonian shape {Hm.shape} does not match state shape {rho.shape}.")
    if t == 0:
        return DensityOperator(rho.copy())
    if isinstance(H, IntegerSpectrumHamiltonian):
        phase = np.exp(-1j * H.diagonal * t)
        return DensityOperator(hermitian_part(phase[:, None] * rho * phase.conj()[None, :]))
    vals, vecs = np.linalg.eigh(hermitian_part(Hm))
    U = (vecs * np.exp(-1j * vals * t)) @ dagger(vecs)
    return DensityOperator(hermitian_part(U @ rho @ dagger(U)))


def fourier_coefficients(H, rho0):
    """
    Exact Fourier expansion of the evolution under an integer spectrum.

    Label k carries sum_{e - e' = k} Pi_e rho0 Pi_e', so that
    rho(t) = sum_k alpha_k exp(-i k t) with the Fourier system of
    `paratomo.bos`.
    """
    from .bos import fourier_basis
    from .norms import ParametrizedOperator

    rho = as_matrix(rho0)
    diff = H.diagonal[:, None] - H.diagonal[None, :]
    basis = fourier_basis(H.e_max)
    coeffs = [np.where(diff == k, rho, 0.0) for k in basis.index_set]
    return ParametrizedOperator(basis, basis.index_set, coeffs)


def chebyshev_coefficients(H, rho0, cutoff, horizon=1.0):
    """
    Exact normalized-Chebyshev coefficients of rho(T t), t in [-1, 1].

    Each block Pi_e rho0 Pi_e' oscillates as exp(-i (e - e') T t) and is
    expanded through `chebyshev_coeffs_of_phase`.
    """
    from .bos import chebyshev_basis, chebyshev_coeffs_of_phase
    from .norms import ParametrizedOperator

    rho = as_matrix(rho0)
    spec = spectral_decomposition(H)
    d = rho.shape[0]
    coeffs = [np.zeros((d, d), dtype=complex) for _ in range(cutoff + 1)]
    for e, Pe in zip(spec.energies, spec.projectors):
        left = Pe @ rho
        for f, Pf in zip(spec.energies, spec.projectors):
            block = left @ Pf
            if not np.any(np.abs(block) > 1e-15):
                continue
            c = chebyshev_coeffs_of_phase((e - f) * horizon, cutoff)
            for k in range(cutoff + 1):
                coeffs[k] += c[k] * block
    basis = chebyshev_basis(cutoff + 1)
    return ParametrizedOperator(basis, basis.index_set, coeffs)


def prepare_subgaussian_state(H, e0, sigma, rng_seed=None):
    """
    Pure state whose energy populations follow a Gaussian profile.

    p_e = exp(-(e - e0)^2 / 2 sigma^2) / Z over the distinct energies of H,
    spread over Haar random directions inside each eigenspace. The smallest
    valid tau is 1 / Z.

    :returns: (DensityOperator, tau)
    """
    if sigma <= 0:
        raise ArgumentError("sigma must be positive.")
    energies = np.asarray(H.energies, dtype=float)
    if energies.size == 0:
        raise ArgumentError("Empty spectrum.")
    rng = make_rng(rng_seed)
    log_w = -0.5 * (energies - e0) ** 2 / sigma ** 2
    log_z = float(np.logaddexp.reduce(log_w))
    populations = np.exp(log_w - log_z)
    psi = np.zeros(2 ** H.n_qubits, dtype=complex)
    for e, p in zip(energies, populations):
        idx = np.nonzero(H.diagonal == int(e))[0]
        psi[idx] = math.sqrt(p) * haar_vector(len(idx), rng)
    tau = math.exp(-log_z)
    logging.debug("Prepared sub-Gaussian state (e0=%.3f, sigma=%.3f, tau=%.4f).", e0, sigma, tau)
    return pure_state(psi), tau


def energy_populations(H, rho):
    """Tr[rho Pi_e] for every distinct energy of an integer-spectrum H."""
    diag = np.real(np.diag(as_matrix(rho)))
    return {e: float(diag[H.diagonal == e].sum()) for e in H.energies}


def partial_trace(X, keep, n_qubits=None):
    """
    Traces out every qubit not in `keep` (zero-based, kept in ascending order).
    """
    X = as_matrix(X)
    n = num_qubits(X.shape[0]) if n_qubits is None else n_qubits
    keep = sorted(set(int(q) for q in keep))
    if any(q < 0 or q >= n for q in keep):
        raise ArgumentError(f"Subset {keep} is not contained in the {n} qubits.")
    t = X.reshape([2] * (2 * n))
    current = n
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=q, axis2=q + current)
        current -= 1
    d = 2 ** len(keep)
    return t.reshape(d, d)


@dataclass
class TimeReversal:
    """Unitary V with V H V^dagger = -H."""

    V: np.ndarray
    bare_flip: bool
    residual: float


def _flip_all(n_modes):
    return kron_all([X] * n_modes)


def time_reversal_conjugation(H_f, tol=1e-8):
    """
    Builds V = U_O^dagger X^{(x)n} U_O, mapping H to -H.

    The Majorana normal form comes from the real Schur decomposition
    F = Q T Q^T; V is the product of one transformed Majorana per 2x2 block of
    T, which flips the sign of every block. When X^{(x)n} alone already
    reverses H (no rotation needed, e.g. on-site particle-preserving F) it is
    returned directly.
    """
    H = jordan_wigner(H_f)
    flip = _flip_all(H_f.n_modes)
    residual = float(np.abs(flip @ H @ dagger(flip) + H).max())
    if residual < tol:
        return TimeReversal(flip, True, residual)

    T, Q = scipy.linalg.schur(H_f.F, output="real")
    gammas = majorana_operators(H_f.n_modes)
    transformed = [sum(Q[k, m] * gammas[k] for k in range(2 * H_f.n_modes)) for m in range(2 * H_f.n_modes)]
    d = 2 ** H_f.n_modes
    V = np.eye(d, dtype=complex)
    m = 0
    while m < 2 * H_f.n_modes:
        if m + 1 < 2 * H_f.n_modes and abs(T[m + 1, m]) > 1e-14:
            V = V @ transformed[m + 1]
            m += 2
        else:
            m += 1
    residual = float(np.abs(V @ H @ dagger(V) + H).max())
    if residual > tol:
        logging.warning("Time-reversal conjugation residual %.2e exceeds tolerance %.1e.", residual, tol)
    return TimeReversal(V, False, residual)


def evolve_signed(H_f, rho0, t, reversal=None):
    """
    Evolution for either sign of t using only forward evolution under H.

    For t < 0: rho(t) = V e^{-iH|t|} (V^dagger rho0 V) e^{iH|t|} V^dagger.
    """
    H = jordan_wigner(H_f)
    if t >= 0:
        return evolve(H, rho0, t)
    reversal = reversal or time_reversal_conjugation(H_f)
    V = reversal.V
    moved = evolve(H, dagger(V) @ as_matrix(rho0) @ V, abs(t))
    return DensityOperator(hermitian_part(V @ moved.matrix @ dagger(V)))


def projector_cross_term_check(rho, P1, P2, tol=1e-10):
    """
    Both sides of ||P1 rho P2||_1 <= sqrt(r ||P1 rho P1||_1 ||P2 rho P2||_1),
    r = min(rank P1, rank P2).

    :returns: (lhs, rhs)
    """
    m = as_matrix(rho)
    P1 = np.asarray(P1, dtype=complex)
    P2 = np.asarray(P2, dtype=complex)
    if np.abs(P1 @ P2).max() > tol:
        raise ArgumentError("Projectors are not orthogonal.")
    r = min(int(round(np.trace(P1).real)), int(round(np.trace(P2).real)))
    lhs = trace_norm(P1 @ m @ P2)
    rhs = math.sqrt(max(r, 0) * trace_norm(P1 @ m @ P1) * trace_norm(P2 @ m @ P2))
    return lhs, rhs


def random_orthogonal_projectors(n_qubits, rng_seed=None):
    """Two orthogonal projectors of random ranks spanned by a Haar basis."""
    rng = make_rng(rng_seed)
    d = 2 ** n_qubits
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(g)
    r1 = int(rng.integers(1, d))
    r2 = int(rng.integers(1, d - r1 + 1))
    a, b = q[:, :r1], q[:, r1:r1 + r2]
    return a @ dagger(a), b @ dagger(b)


def pauli_terms(observable):
    """
    Normalizes a Pauli word or a {word: weight} mapping into [(weight, word)].

    Returns None for an explicit matrix.
    """
    if isinstance(observable, str):
        return [(1.0, observable.upper())]
    if isinstance(observable, dict):
        return [(float(w), label.upper()) for label, w in observable.items()]
    return None


def observable_matrix(observable):
    terms = pauli_terms(observable)
    if terms is None:
        return np.asarray(observable, dtype=complex)
    return sum(w * pauli_word(label) for w, label in terms)
