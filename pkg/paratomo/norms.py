# paratomo/norms.py
"""
Induced semi-norms of operators, operator vectors and parametrized operators.

An ObservableSet O defines ||X||_O = sup_{A in O} |Tr[A X]|; the vector and
L^p versions take the supremum outside the p-norm. Observables are Hermitian.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CapabilityError
from .qsim import (
    all_pauli_labels,
    dagger,
    hermitian_part,
    num_qubits,
    observable_matrix,
    partial_trace,
    pauli_word,
    trace_norm,
)
from .utils import make_rng

TRACE = "trace"
LOCAL = "local"
HILBERT_SCHMIDT = "hilbert_schmidt"
PAULI_LIST = "pauli_list"
OBSERVABLE_KINDS = (TRACE, LOCAL, HILBERT_SCHMIDT, PAULI_LIST)

SUPPORTED_P = (1, 2, math.inf)


@dataclass(frozen=True)
class ObservableSet:
    """Descriptor of the observable class a semi-norm is induced by."""

    kind: str
    n_qubits: int
    ell: int = None
    paulis: tuple = ()

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ArgumentError(f"Unsupported observable set kind '{self.kind}'.")
        if self.kind == LOCAL and (self.ell is None or not 1 <= self.ell <= self.n_qubits):
            raise ArgumentError(f"Locality ell={self.ell} must lie in [1, {self.n_qubits}].")
        if self.kind == PAULI_LIST:
            if not self.paulis:
                raise ArgumentError("An explicit Pauli list must not be empty.")
            for label in self.paulis:
                if len(label) != self.n_qubits:
                    raise ArgumentError(f"Pauli word '{label}' does not act on {self.n_qubits} qubits.")
                pauli_word(label)

    def matrices(self):
        return [pauli_word(label) for label in self.paulis]


def trace_ball(n_qubits):
    return ObservableSet(TRACE, n_qubits)


def local_ball(n_qubits, ell):
    return ObservableSet(LOCAL, n_qubits, ell=ell)


def hilbert_schmidt_ball(n_qubits):
    return ObservableSet(HILBERT_SCHMIDT, n_qubits)


def pauli_list(labels):
    labels = tuple(label.upper() for label in labels)
    if not labels:
        raise ArgumentError("An explicit Pauli list must not be empty.")
    return ObservableSet(PAULI_LIST, len(labels[0]), paulis=labels)


def local_pauli_list(n_qubits, ell):
    """All Pauli words acting non-trivially on 1..ell qubits."""
    labels = [w for w in all_pauli_labels(n_qubits) if 0 < sum(c != "I" for c in w) <= ell]
    return pauli_list(labels)


@dataclass
class ParametrizedOperator:
    """
    Finite expansion X(x) = sum_{k in S} alpha_k phi_k(x).

    Coefficients need not be Hermitian or positive; the object is linear
    data, not a state.
    """

    basis: object
    support: tuple
    coeffs: list = field(repr=False)

    def __post_init__(self):
        self.support = tuple(int(k) for k in self.support)
        if list(self.support) != sorted(set(self.support)):
            raise ArgumentError("Support labels must be unique and sorted.")
        for k in self.support:
            self.basis.position(k)
        self.coeffs = [np.asarray(c, dtype=complex) for c in self.coeffs]
        if len(self.coeffs) != len(self.support):
            raise ArgumentError(f"{len(self.coeffs)} coefficients for {len(self.support)} labels.")
        shapes = {c.shape for c in self.coeffs}
        if len(shapes) > 1:
            raise ArgumentError(f"Coefficient shapes differ: {sorted(shapes)}.")

    @property
    def dim(self):
        return self.coeffs[0].shape[0]

    @property
    def n_qubits(self):
        return num_qubits(self.dim)

    def coefficient(self, k):
        try:
            return self.coeffs[self.support.index(int(k))]
        except ValueError:
            raise ArgumentError(f"Label {k} is not in the support.") from None

    def evaluate(self, x):
        """X(x) as a dense matrix."""
        phi = self.basis.evaluate(self.support, [x])[0]
        return np.tensordot(phi, np.stack(self.coeffs), axes=1)

    def scalar_coefficients(self, observable):
        """Tr[O alpha_k] for k in the support; O is a matrix, a Pauli word or a {word: weight} mapping."""
        O = observable_matrix(observable)
        return np.array([np.sum(O.T * c) for c in self.coeffs])

    def trajectory(self, observable, points):
        """Tr[O X(x)] at every point."""
        phi = self.basis.evaluate(self.support, points)
        return phi @ self.scalar_coefficients(observable)

    def restrict(self, labels):
        labels = sorted(set(int(k) for k in labels))
        missing = set(labels) - set(self.support)
        if missing:
            raise ArgumentError(f"Labels {sorted(missing)} are not in the support.")
        return ParametrizedOperator(self.basis, labels, [self.coefficient(k) for k in labels])

    def complement(self, labels):
        keep = [k for k in self.support if k not in set(int(l) for l in labels)]
        return keep, [self.coefficient(k) for k in keep]

    def reduce(self, keep):
        """Coefficient-wise partial trace onto the qubits in `keep`."""
        return ParametrizedOperator(self.basis, self.support, [partial_trace(c, keep) for c in self.coeffs])

    def _combine(self, other, sign):
        if other.basis != self.basis:
            raise ArgumentError("Parametrized operators live in different bases.")
        labels = sorted(set(self.support) | set(other.support))
        zero = np.zeros_like(self.coeffs[0])
        mine = dict(zip(self.support, self.coeffs))
        theirs = dict(zip(other.support, other.coeffs))
        coeffs = [mine.get(k, zero) + sign * theirs.get(k, zero) for k in labels]
        return ParametrizedOperator(self.basis, labels, coeffs)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return ParametrizedOperator(self.basis, self.support, [scalar * c for c in self.coeffs])

    __rmul__ = __mul__


@dataclass(frozen=True)
class SeminormValue:
    """A semi-norm known exactly (lower == upper) or bracketed by two bounds."""

    lower: float
    upper: float

    @property
    def exact(self):
        return math.isclose(self.lower, self.upper, rel_tol=1e-10, abs_tol=1e-14)

    @property
    def value(self):
        return self.upper

    def __float__(self):
        return float(self.upper)


def _exact(value):
    return SeminormValue(float(value), float(value))


def _check_p(p):
    if p not in SUPPORTED_P:
        raise ArgumentError(f"p must be one of 1, 2, inf; got {p!r}.")


def _p_norm(values, p):
    values = np.abs(np.asarray(values))
    if values.size == 0:
        return 0.0
    if p == math.inf:
        return float(values.max())
    return float(np.sum(values ** p) ** (1.0 / p))


def operator_sign(H):
    """Hermitian unitary-ball element sign(H) maximizing Tr[O H] over ||O||_inf <= 1."""
    vals, vecs = np.linalg.eigh(H)
    return (vecs * np.sign(vals)) @ dagger(vecs)


def induced_seminorm(X, obs):
    """||X||_O for a single operator."""
    X = np.asarray(X, dtype=complex)
    if np.abs(X - dagger(X)).max() > 1e-12 * max(1.0, np.abs(X).max()):
        logging.warning("Non-Hermitian operator passed to induced_seminorm; using its Hermitian part.")
        X = hermitian_part(X)
    if obs.kind == TRACE:
        return trace_norm(X)
    if obs.kind == HILBERT_SCHMIDT:
        return float(np.linalg.norm(X))
    if obs.kind == LOCAL:
        n = num_qubits(X.shape[0])
        return max(trace_norm(partial_trace(X, I, n)) for I in itertools.combinations(range(n), obs.ell))
    if obs.kind == PAULI_LIST:
        return max(abs(np.trace(P @ X)) for P in obs.matrices())
    raise CapabilityError(f"Unsupported observable set kind '{obs.kind}'.")


def _hermitian_split(ops):
    """X = H + iK with H, K Hermitian, returned as the flat list [H_0, K_0, H_1, ...]."""
    parts = []
    for X in ops:
        parts.append(hermitian_part(X))
        parts.append((X - dagger(X)) / 2j)
    return parts


def _hs_vector_norm(ops):
    # Tr[O X_i] = <o, h_i> + i <o, k_i> for Hermitian O, so the supremum is the top eigenvalue of the real Gram.
    parts = _hermitian_split(ops)
    flat = np.stack([w.ravel() for w in parts])
    kernel = np.real(flat.conj() @ flat.T)
    return math.sqrt(max(float(np.linalg.eigvalsh(kernel)[-1]), 0.0))


def _ball_bounds(ops, p, rng, restarts=16, sweeps=10):
    """Lower bound by alternating ascent over sign operators, upper bound by the triangle inequality."""
    upper = _p_norm([trace_norm(X) for X in ops], p)

    def objective(O):
        return _p_norm([np.sum(O.T * X) for X in ops], p)

    starts = [operator_sign(W) for W in _hermitian_split(ops) if np.abs(W).max() > 0]
    parts = _hermitian_split(ops)
    for _ in range(restarts):
        mix = sum(r * W for r, W in zip(rng.normal(size=len(parts)), parts))
        starts.append(operator_sign(hermitian_part(mix)))
    best = 0.0
    for O in starts:
        for _ in range(sweeps):
            values = np.array([np.sum(O.T * X) for X in ops])
            mags = np.abs(values)
            if p == math.inf:
                weights = (mags == mags.max()).astype(float)
            elif p == 1:
                weights = np.ones_like(mags)
            else:
                weights = mags
            phases = np.where(mags > 0, np.conj(values) / np.where(mags > 0, mags, 1.0), 0.0)
            grad = hermitian_part(sum(w * ph * X for w, ph, X in zip(weights, phases, ops)))
            if np.abs(grad).max() == 0:
                break
            candidate = operator_sign(grad)
            if objective(candidate) <= objective(O) + 1e-15:
                break
            O = candidate
        best = max(best, objective(O))
    return min(best, upper), upper


def induced_lp_vector(V, obs, p, rng_seed=0):
    """
    ||V||_{O,p} = sup_{A in O} (sum_i |Tr[A V_i]|^p)^(1/p).

    Exact for explicit Pauli lists and (p = 2) the Hilbert-Schmidt ball. For
    the trace and local balls there is no closed form: the result brackets
    the supremum between an ascent-based lower bound and the triangle bound
    (sum_i ||V_i||_1^p)^(1/p).

    :returns: SeminormValue
    """
    _check_p(p)
    ops = [np.asarray(X, dtype=complex) for X in V]
    if not ops:
        raise ArgumentError("induced_lp_vector needs at least one operator.")
    if obs.kind == PAULI_LIST:
        return _exact(max(_p_norm([np.sum(P.T * X) for X in ops], p) for P in obs.matrices()))
    if obs.kind == HILBERT_SCHMIDT:
        if p == 2:
            return _exact(_hs_vector_norm(ops))
        if p == math.inf:
            return _exact(max(_hs_vector_norm([X]) for X in ops))
        raise CapabilityError("The Hilbert-Schmidt ball supports p = 2 and p = inf only.")
    rng = make_rng(rng_seed)
    if obs.kind == TRACE:
        lower, upper = _ball_bounds(ops, p, rng)
        return SeminormValue(lower, upper)
    if obs.kind == LOCAL:
        n = num_qubits(ops[0].shape[0])
        lower = upper = 0.0
        for I in itertools.combinations(range(n), obs.ell):
            lo, hi = _ball_bounds([partial_trace(X, I, n) for X in ops], p, rng)
            lower, upper = max(lower, lo), max(upper, hi)
        return SeminormValue(lower, upper)
    raise CapabilityError(f"Unsupported observable set kind '{obs.kind}'.")


def induced_Lp_seminorm(X, obs, p, quadrature_nodes=2048, route="parseval"):
    """
    ||X||_{O,L^p} = sup_{A in O} ||Tr[A X(.)]||_{L^p(mu)}.

    p = 2 goes through Parseval (the l^2 norm of the coefficient vector) unless
    route='quadrature'. p in {1, inf} and the quadrature route require an
    explicit Pauli list; p = inf is the maximum over the quadrature nodes.
    """
    _check_p(p)
    if p == 2 and route == "parseval":
        return float(induced_lp_vector(X.coeffs, obs, 2))
    if obs.kind != PAULI_LIST:
        raise CapabilityError(f"L^{p} semi-norm by quadrature needs an explicit Pauli list, not '{obs.kind}'.")
    nodes, weights = X.basis.quadrature(quadrature_nodes)
    phi = X.basis.evaluate(X.support, nodes)
    best = 0.0
    for P in obs.matrices():
        values = np.abs(phi @ X.scalar_coefficients(P))
        if p == math.inf:
            norm = float(values.max())
        else:
            norm = float(np.sum(weights * values ** p) ** (1.0 / p))
        best = max(best, norm)
    return best


def sparsity_defect(X, S, obs, p):
    """
    ||alpha_{complement of S}||_{O,p}, the sparsity defect of X relative to S.

    Bracketed semi-norms report their upper bound.
    """
    S = set(int(k) for k in S)
    if not S <= set(X.support):
        raise ArgumentError(f"Labels {sorted(S - set(X.support))} are not in the support.")
    _, rest = X.complement(S)
    if not rest:
        return 0.0
    return float(induced_lp_vector(rest, obs, p))


def apply_to_operators(A, ops):
    """(A V)_i = sum_j A_ij V_j for a scalar matrix A and a vector of operators."""
    return list(np.tensordot(np.asarray(A), np.stack([np.asarray(X) for X in ops]), axes=1))
