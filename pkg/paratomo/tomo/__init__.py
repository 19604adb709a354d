# paratomo/tomo/__init__.py
from ..errors import ArgumentError
from ..utils import make_rng
from .base import DenseEstimate, TomographicProcedure
from .exact import ExactOracle
from .pauli import FullPauliTomography
from .shadows import (
    LocalCliffordShadows,
    ShadowData,
    fermionic_shadow_sample_count,
    shadow_expectation,
    shadow_norm_bound,
    shadow_sample_count,
)

PROCEDURES = {
    ExactOracle.kind: ExactOracle,
    FullPauliTomography.kind: FullPauliTomography,
    LocalCliffordShadows.kind: LocalCliffordShadows,
}


def make_procedure(kind, n_qubits, **options):
    """Builds a procedure from its config name ('exact', 'pauli' or 'shadows')."""
    try:
        return PROCEDURES[kind](n_qubits, **options)
    except KeyError:
        raise ArgumentError(f"Unknown tomographic procedure '{kind}'.") from None


def acquire(proc, rho, epsilon, delta, rng_seed=None):
    """Runs one acquisition of `proc` on `rho`."""
    return proc.acquire(rho, epsilon, delta, make_rng(rng_seed))
