# paratomo/bos.py
"""
Bounded orthonormal systems.

Two univariate systems are supported:

* ``fourier``: phi_k(t) = exp(-i k t) on [0, 2pi), uniform measure, K = 1,
  labels -E_max..E_max in ascending order.
* ``chebyshev``: phi_k(t) = xi_k cos(k arccos t) on [-1, 1], arcsine measure
  (1/pi)(1 - t^2)^(-1/2), xi_0 = 1 and xi_k = sqrt(2) otherwise, K = sqrt(2),
  labels 0..D-1.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .errors import ArgumentError, DomainError
from .utils import make_rng

FOURIER = "fourier"
CHEBYSHEV = "chebyshev"
BASIS_KINDS = (FOURIER, CHEBYSHEV)

TWO_PI = 2.0 * np.pi
_DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class BasisSystem:
    """Descriptor of a bounded orthonormal function system."""

    kind: str
    index_set: tuple
    bound_K: float

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise ArgumentError(f"Unknown basis kind '{self.kind}'.")
        if not self.index_set:
            raise ArgumentError("A basis needs at least one label.")
        if len(set(self.index_set)) != len(self.index_set):
            raise ArgumentError("Basis labels must be unique.")

    @property
    def size(self):
        return len(self.index_set)

    @property
    def domain(self):
        return (0.0, TWO_PI) if self.kind == FOURIER else (-1.0, 1.0)

    def position(self, label):
        """Column index of `label` in the declared order."""
        try:
            return self.index_set.index(int(label))
        except ValueError:
            raise DomainError(f"Label {label} is not part of the {self.kind} index set.") from None

    def positions(self, labels):
        return [self.position(k) for k in labels]

    def check_points(self, points):
        """Validates parameter values and returns them as a float array."""
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        lo, hi = self.domain
        if self.kind == FOURIER:
            bad = (pts < -_DOMAIN_TOL) | (pts >= hi + _DOMAIN_TOL)
        else:
            bad = (pts < lo - _DOMAIN_TOL) | (pts > hi + _DOMAIN_TOL)
        if np.any(bad):
            raise DomainError(f"Parameter value {pts[bad][0]!r} outside the {self.kind} domain {self.domain}.")
        if self.kind == CHEBYSHEV:
            pts = np.clip(pts, -1.0, 1.0)
        return pts

    def evaluate(self, labels, points):
        """
        Evaluates phi_k(x) for every (x, k) pair.

        :param labels: Iterable of basis labels (each must belong to the index set).
        :param points: Iterable of parameter values.
        :returns: complex array of shape (len(points), len(labels)).
        """
        labels = list(labels)
        for k in labels:
            if int(k) not in self.index_set:
                raise DomainError(f"Label {k} is not part of the {self.kind} index set.")
        pts = self.check_points(points)
        ks = np.asarray(labels, dtype=float)
        if self.kind == FOURIER:
            return np.exp(-1j * np.outer(pts, ks))
        xi = np.where(ks == 0, 1.0, np.sqrt(2.0))
        return (np.cos(np.outer(np.arccos(pts), ks)) * xi).astype(complex)

    def quadrature(self, nodes=2048):
        """
        Nodes and weights integrating against the orthogonality measure.

        Fourier uses the trapezoid rule on [0, 2pi) (exact for |k - j| < nodes);
        Chebyshev uses Gauss-Chebyshev nodes (exact up to degree 2*nodes - 1).
        """
        if nodes < 1:
            raise ArgumentError("Quadrature needs at least one node.")
        if self.kind == FOURIER:
            x = TWO_PI * np.arange(nodes) / nodes
        else:
            x = np.cos((2.0 * np.arange(1, nodes + 1) - 1.0) * np.pi / (2.0 * nodes))
        return x, np.full(nodes, 1.0 / nodes)


def fourier_basis(e_max):
    """Fourier system with labels -e_max..e_max."""
    if e_max < 0:
        raise ArgumentError("e_max must be non-negative.")
    return BasisSystem(FOURIER, tuple(range(-int(e_max), int(e_max) + 1)), 1.0)


def chebyshev_basis(size):
    """Normalized Chebyshev system with labels 0..size-1."""
    if size < 1:
        raise ArgumentError("A Chebyshev system needs at least one polynomial.")
    return BasisSystem(CHEBYSHEV, tuple(range(int(size))), math.sqrt(2.0))


def make_basis(kind, size_param):
    """Builds a basis from its config description (E_max for Fourier, D for Chebyshev)."""
    if kind == FOURIER:
        return fourier_basis(size_param)
    if kind == CHEBYSHEV:
        return chebyshev_basis(size_param)
    raise ArgumentError(f"Unknown basis kind '{kind}'.")


def evaluate_basis(basis, k, x):
    """Returns phi_k(x) as a Python complex."""
    return complex(basis.evaluate([k], [x])[0, 0])


def sample_measure(basis, count, rng_seed=None):
    """
    Draws i.i.d. samples from the orthogonality measure of `basis`.

    Chebyshev samples use the exact inverse CDF t = cos(pi U).
    """
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise ArgumentError(f"Sample count must be a positive integer, got {count!r}.")
    rng = make_rng(rng_seed)
    if basis.kind == FOURIER:
        return rng.uniform(0.0, TWO_PI, size=int(count))
    return np.cos(np.pi * rng.uniform(0.0, 1.0, size=int(count)))


@dataclass
class MeasurementMatrix:
    """A_{ik} = phi_k(x_i) together with the points it was built from."""

    entries: np.ndarray
    sample_points: np.ndarray
    basis: BasisSystem
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.labels is None:
            self.labels = tuple(self.basis.index_set)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def M(self):
        return self.entries.shape[0]

    def columns(self, labels):
        """Sub-matrix A_S restricted to `labels` (in the given order)."""
        pos = [self.labels.index(int(k)) for k in labels]
        return self.entries[:, pos]

    def normalized(self):
        """A / sqrt(M), the scaling under which RIP constants are stated."""
        return self.entries / math.sqrt(self.M)


def build_measurement_matrix(basis, points):
    """Builds the M x D sampling matrix, columns in the basis' declared order."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ArgumentError("Cannot build a measurement matrix from an empty point list.")
    entries = basis.evaluate(basis.index_set, pts)
    logging.debug("Built %dx%d %s measurement matrix.", entries.shape[0], entries.shape[1], basis.kind)
    return MeasurementMatrix(entries=entries, sample_points=pts.copy(), basis=basis)


def bessel_j(k_max, omega):
    """Bessel functions of the first kind J_0(omega)..J_kmax(omega)."""
    if k_max < 0:
        raise ArgumentError("k_max must be non-negative.")
    ks = np.arange(k_max + 1)
    values = scipy.special.jv(ks, abs(float(omega)))
    # J_k(-x) = (-1)^k J_k(x)
    return values * (-1.0) ** ks if omega < 0 else values


def chebyshev_coeffs_of_phase(omega, cutoff):
    """
    Coefficients of exp(-i omega t) in the normalized Chebyshev system.

    c_k = (-i)^k xi_k J_k(omega), k = 0..cutoff, so that
    sum_k c_k T~_k(t) -> exp(-i omega t) on [-1, 1].
    """
    if cutoff < 0:
        raise ArgumentError("cutoff must be non-negative.")
    ks = np.arange(cutoff + 1)
    xi = np.where(ks == 0, 1.0, math.sqrt(2.0))
    return ((-1j) ** ks) * xi * bessel_j(cutoff, omega)


def bessel_tail_bound(omega, k):
    """Returns (e |omega| / (2k))^k, an upper bound on |J_k(omega)|."""
    if k < 1:
        raise ArgumentError("The Bessel tail bound is undefined for k < 1.")
    return (math.e * abs(omega) / (2.0 * k)) ** k


def chebyshev_coefficient_bound(n_modes, omega_max, k):
    """Trace-norm bound 2^(2n + 1/2) (e omega_max / 2k)^k on a Chebyshev coefficient."""
    return 2.0 ** (2 * n_modes + 0.5) * bessel_tail_bound(omega_max, k)
