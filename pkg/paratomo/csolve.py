# paratomo/csolve.py
"""
Scalar compressed sensing: pseudo-inverses, hard thresholding solvers and
brute-force restricted-isometry certification for small matrices.
"""
import hashlib
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, GuardExceededError, SingularMatrixError

BRUTE_FORCE = "brute_force"
BOUND_ONLY = "bound_only"
RIP_SUPPORT_GUARD = 10 ** 6
_CHUNK = 4096


def pseudo_inverse(A, rcond=1e-10):
    """
    A^+ = (A^dagger A)^-1 A^dagger through the SVD.

    :raises SingularMatrixError: if A is not injective.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[1] == 0:
        raise ArgumentError(f"Expected a non-empty matrix, got shape {A.shape}.")
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    smallest = float(s.min()) if A.shape[0] >= A.shape[1] else 0.0
    if A.shape[0] < A.shape[1] or smallest <= rcond * float(s.max()):
        raise SingularMatrixError(
            f"Matrix of shape {A.shape} is not injective (smallest singular value {smallest:.3e}); "
            "sample more parameter points.",
            smallest,
        )
    return (vh.conj().T / s) @ u.conj().T


def smallest_singular_value(A):
    A = np.asarray(A)
    if A.shape[0] < A.shape[1]:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False).min())


def pseudo_inverse_norm_bound(M, delta):
    """sqrt(1 + delta) / (sqrt(M) (1 - delta)), valid when Delta_s(A / sqrt(M)) <= delta < 1."""
    if not 0 <= delta < 1:
        return math.inf
    return math.sqrt(1.0 + delta) / (math.sqrt(M) * (1.0 - delta))


def hard_threshold(x, s):
    """
    Keeps the s largest entries in magnitude, ties going to the lowest index.

    :returns: (thresholded copy, sorted support)
    """
    x = np.asarray(x)
    s = int(s)
    if not 0 <= s <= x.size:
        raise ArgumentError(f"Sparsity {s} outside [0, {x.size}].")
    order = np.argsort(-np.abs(x), kind="stable")
    support = np.sort(order[:s])
    out = np.zeros_like(x)
    out[support] = x[support]
    return out, support


@dataclass
class SolverResult:
    c: np.ndarray
    support: np.ndarray
    iterations: int
    residual: float


def _check_inputs(A, f_hat, s):
    A = np.asarray(A)
    f_hat = np.asarray(f_hat)
    if A.shape[0] != f_hat.shape[0]:
        raise ArgumentError(f"Matrix with {A.shape[0]} rows cannot explain {f_hat.shape[0]} observations.")
    if not 1 <= s <= A.shape[1]:
        raise ArgumentError(f"Sparsity {s} outside [1, {A.shape[1]}].")
    return A, f_hat


def iht_solve(A, f_hat, s, max_iters=1000, tol=1e-12, step=None):
    """
    c_{t+1} = T_s[c_t + step A^dagger (f_hat - A c_t)].

    step defaults to 1/M, i.e. the plain update applied to the normalized pair
    (A / sqrt(M), f_hat / sqrt(M)). The returned iterate is the best one seen.
    """
    A, f_hat = _check_inputs(A, f_hat, s)
    step = 1.0 / A.shape[0] if step is None else step
    c = np.zeros(A.shape[1], dtype=np.result_type(A, f_hat, complex))
    best = SolverResult(c, np.arange(0), 0, float(np.linalg.norm(f_hat)))
    if best.residual == 0.0:
        return SolverResult(c, hard_threshold(c, s)[1], 0, 0.0)
    previous = best.residual
    for it in range(1, max_iters + 1):
        c, support = hard_threshold(c + step * (A.conj().T @ (f_hat - A @ c)), s)
        residual = float(np.linalg.norm(A @ c - f_hat))
        if residual < best.residual:
            best = SolverResult(c, support, it, residual)
        if abs(previous - residual) <= tol * max(previous, 1e-300):
            break
        previous = residual
    logging.debug("IHT stopped after %d iterations (residual %.3e).", it, best.residual)
    return best


def iht(A, f_hat, s, max_iters=1000, tol=1e-12):
    return iht_solve(A, f_hat, s, max_iters, tol).c


def _least_squares_on(A, f_hat, support):
    c = np.zeros(A.shape[1], dtype=np.result_type(A, f_hat, complex))
    c[support] = np.linalg.lstsq(A[:, support], f_hat, rcond=None)[0]
    return c


def htp_solve(A, f_hat, s, max_iters=1000, tol=1e-12, step=None, initial_support=None):
    """
    Hard thresholding pursuit: the IHT support step followed by an exact least
    squares solve restricted to the selected support. Stops at a support fixed
    point or when the residual stagnates.
    """
    A, f_hat = _check_inputs(A, f_hat, s)
    step = 1.0 / A.shape[0] if step is None else step
    if initial_support is not None:
        support = np.sort(np.asarray(initial_support, dtype=int))
        c = _least_squares_on(A, f_hat, support)
    else:
        support = None
        c = np.zeros(A.shape[1], dtype=np.result_type(A, f_hat, complex))
    residual = float(np.linalg.norm(A @ c - f_hat))
    best = SolverResult(c, support if support is not None else np.arange(0), 0, residual)
    if residual == 0.0 and support is None:
        return SolverResult(c, hard_threshold(c, s)[1], 0, 0.0)
    for it in range(1, max_iters + 1):
        _, new_support = hard_threshold(c + step * (A.conj().T @ (f_hat - A @ c)), s)
        if support is not None and np.array_equal(new_support, support):
            break
        support = new_support
        c = _least_squares_on(A, f_hat, support)
        previous, residual = residual, float(np.linalg.norm(A @ c - f_hat))
        if residual < best.residual or best.support.size == 0:
            best = SolverResult(c, support, it, residual)
        if abs(previous - residual) <= tol * max(previous, 1e-300):
            break
    logging.debug("HTP stopped after %d iterations (residual %.3e).", best.iterations, best.residual)
    return best


def htp(A, f_hat, s, max_iters=1000, tol=1e-12):
    return htp_solve(A, f_hat, s, max_iters, tol).c


@dataclass(frozen=True)
class RipCertificate:
    """Restricted isometry constant of order s."""

    matrix_id: str
    s: int
    delta_s: float
    method: str

    @property
    def certified(self):
        return self.method == BRUTE_FORCE


def matrix_id(A):
    """Short content digest identifying a matrix in certificates and reports."""
    A = np.ascontiguousarray(A)
    return hashlib.sha1(A.tobytes() + str(A.shape).encode()).hexdigest()[:12]


def rip_constant_bruteforce(A, s, guard=RIP_SUPPORT_GUARD):
    """
    Delta_s = max_{|S| = s} ||I - A_S^dagger A_S|| over every column subset.

    A is used as given; pass A / sqrt(M) for the normalized constant.
    """
    A = np.asarray(A)
    D = A.shape[1]
    if not 1 <= s <= D:
        raise ArgumentError(f"Sparsity {s} outside [1, {D}].")
    total = math.comb(D, s)
    if total > guard:
        raise GuardExceededError(f"{total} supports of size {s} exceed the brute-force guard of {guard}.")
    delta = 0.0
    combos = itertools.combinations(range(D), s)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        sub = A[:, chunk]
        gram = np.einsum("mci,mcj->cij", sub.conj(), sub)
        eig = np.linalg.eigvalsh(gram)
        delta = max(delta, float(np.abs(eig - 1.0).max()))
    logging.debug("Brute-force RIP: Delta_%d = %.4f over %d supports.", s, delta, total)
    return RipCertificate(matrix_id(A), int(s), delta, BRUTE_FORCE)


def rip_bound_certificate(A, s, delta):
    """A certificate that only records an assumed constant (theorem mode)."""
    return RipCertificate(matrix_id(A), int(s), float(delta), BOUND_ONLY)


def _check_disjoint(S, S_prime):
    S, S_prime = [int(k) for k in S], [int(k) for k in S_prime]
    if set(S) & set(S_prime):
        raise ArgumentError(f"Supports {S} and {S_prime} overlap.")
    return S, S_prime


def spillover_check(A_normalized, S, S_prime, delta_2s=None):
    """
    Both sides of ||A_S^+ A_S'|| <= Delta_2s / (1 - Delta_2s).

    Delta_2s is computed by brute force with s = max(|S|, |S'|) unless given.
    """
    A = np.asarray(A_normalized)
    S, S_prime = _check_disjoint(S, S_prime)
    if delta_2s is None:
        delta_2s = rip_constant_bruteforce(A, min(2 * max(len(S), len(S_prime)), A.shape[1])).delta_s
    lhs = float(np.linalg.norm(pseudo_inverse(A[:, S]) @ A[:, S_prime], 2))
    rhs = delta_2s / (1.0 - delta_2s) if delta_2s < 1 else math.inf
    return lhs, rhs


def cross_gram_check(A_normalized, S, S_prime, delta_2s=None):
    """Both sides of ||A_S^dagger A_S'|| <= Delta_2s."""
    A = np.asarray(A_normalized)
    S, S_prime = _check_disjoint(S, S_prime)
    if delta_2s is None:
        delta_2s = rip_constant_bruteforce(A, min(2 * max(len(S), len(S_prime)), A.shape[1])).delta_s
    return float(np.linalg.norm(A[:, S].conj().T @ A[:, S_prime], 2)), delta_2s
