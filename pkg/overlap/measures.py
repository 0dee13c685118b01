"""
Codeword overlap, Uhlmann fidelity and Wootters concurrence.

Fidelity here is the root fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho)), so that
F(I/2, |0><0|) = 1/sqrt(2). Spectral quantities that are zero in exact arithmetic come
out as rounding noise of order machine epsilon, and their square roots would be of
order 1e-8; both the 2x2 closed form and the eigen-based paths therefore treat values
below a rank-determination floor as exact zeros.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss

from overlap.config import settings
from overlap.errors import InvalidParameter, ShapeMismatch
from overlap.fock import DensityOp
from overlap.models import ConcordanceReport, OverlapResult, SphereSampling
from overlap.qubit_codes import CodeSpec, apply_choi, effective_channel

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
# Squared fidelities below this are rounding noise of an exact zero
_FIDELITY_SQ_FLOOR = 32 * _EPS
# Relative floor for the spectrum of sqrt(rho) rho~ sqrt(rho)
_CONCURRENCE_FLOOR = 1e-12

SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))

Operator = Union[DensityOp, np.ndarray]


def _matrix(rho: Operator, validate: bool = True) -> np.ndarray:
    if isinstance(rho, DensityOp):
        if validate:
            rho.validate()
        return rho.matrix
    mat = np.asarray(rho, dtype=complex)
    if validate:
        side = mat.shape[0]
        DensityOp((side,), mat).validate()
    return mat


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix with eigenvalues below the rank floor set to zero."""
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    floor = vals.max(initial=0.0) * mat.shape[0] * _EPS
    roots = np.sqrt(np.where(vals > floor, vals, 0.0))
    return (vecs * roots) @ vecs.conj().T


# Fidelity ------------------------------------------------------------------------

def fidelity_2x2_batch(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """
    Closed-form qubit fidelity over stacks of shape (..., 2, 2).

    Uses F^2 = tr(rho sigma) + 2 sqrt(det rho det sigma).
    """
    overlap = np.einsum("...ij,...ji->...", rho, sigma).real
    det_rho = np.maximum(np.linalg.det(rho).real, 0.0)
    det_sigma = np.maximum(np.linalg.det(sigma).real, 0.0)
    squared = overlap + 2.0 * np.sqrt(det_rho * det_sigma)
    squared = np.where(squared > _FIDELITY_SQ_FLOOR, squared, 0.0)
    return np.clip(np.sqrt(squared), 0.0, 1.0)


def fidelity_2x2(rho: Operator, sigma: Operator) -> float:
    """Closed-form fidelity between two qubit states."""
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ShapeMismatch("fidelity_2x2 needs two 2x2 density operators")
    return float(fidelity_2x2_batch(a, b))


def uhlmann_fidelity(
    rho: Operator, sigma: Operator, method: Literal["auto", "closed_form", "eigen"] = "auto"
) -> float:
    """
    Root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)).

    The general path evaluates it as the nuclear norm of sqrt(rho) sqrt(sigma).

    Args:
        rho, sigma: Density operators of equal dimension
        method: "auto" uses the closed form for qubits and eigen-decomposition otherwise

    Raises:
        InvalidState: either argument is not a valid density operator
        ShapeMismatch: dimensions differ
    """
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ShapeMismatch(f"Cannot compare states of shapes {a.shape} and {b.shape}")
    if method == "closed_form" or (method == "auto" and a.shape == (2, 2)):
        if a.shape != (2, 2):
            raise ShapeMismatch("The closed form applies to qubits only")
        return float(fidelity_2x2_batch(a, b))

    value = np.linalg.norm(_psd_sqrt(a) @ _psd_sqrt(b), "nuc")
    return float(min(max(value, 0.0), 1.0))


# Sphere sampling -------------------------------------------------------------------

@dataclass(frozen=True)
class SphereNodes:
    """Points (w, theta) on the Bloch sphere with weights summing to one."""
    w: np.ndarray
    theta: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.w.size


def sphere_nodes(sampling: SphereSampling) -> SphereNodes:
    """
    Quadrature or Monte Carlo nodes for averaging over the uniform sphere measure.

    The quadrature is a product of Gauss-Legendre in cos(w) and the trapezoid rule in
    theta, with round(sqrt(n_points)) nodes per axis.
    """
    if sampling.scheme == "quadrature":
        per_axis = max(1, round(math.sqrt(sampling.n_points)))
        x, gl_weights = leggauss(per_axis)
        theta = 2 * np.pi * np.arange(per_axis) / per_axis
        cos_w, th = np.meshgrid(x, theta, indexing="ij")
        weights = np.outer(gl_weights / 2.0, np.full(per_axis, 1.0 / per_axis))
        return SphereNodes(np.arccos(cos_w).ravel(), th.ravel(), weights.ravel())

    rng = np.random.default_rng(sampling.seed)
    cos_w = rng.uniform(-1.0, 1.0, sampling.n_points)
    theta = rng.uniform(0.0, 2 * np.pi, sampling.n_points)
    weights = np.full(sampling.n_points, 1.0 / sampling.n_points)
    return SphereNodes(np.arccos(cos_w), theta, weights)


def _pure_stack(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    psi = np.stack([c0, c1], axis=-1)
    return np.einsum("ni,nj->nij", psi, psi.conj())


def average_over_sphere(values: np.ndarray, nodes: SphereNodes, sampling: SphereSampling):
    """Weighted mean plus a standard error for Monte Carlo nodes."""
    mean = float(np.sum(nodes.weights * values))
    stderr = None
    if sampling.scheme == "monte_carlo" and len(nodes) > 1:
        stderr = float(np.std(values, ddof=1) / math.sqrt(len(nodes)))
    return mean, stderr


def codeword_overlap(
    code: CodeSpec, gamma: float, sampling: Optional[SphereSampling] = None
) -> OverlapResult:
    """
    Average fidelity between the decoded outputs of antipodal logical inputs.

    Both members of each pair go through the code's effective channel at gamma; the
    channel reproduces transmit_and_decode (or the closed form for codes without a
    Fock-level recovery).
    """
    sampling = sampling or SphereSampling()
    nodes = sphere_nodes(sampling)
    choi = effective_channel(code, gamma)

    half = nodes.w / 2
    phase = np.exp(1j * nodes.theta)
    rho_q = _pure_stack(np.cos(half) + 0j, phase * np.sin(half))
    rho_qbar = _pure_stack(np.sin(half) + 0j, -phase * np.cos(half))

    fidelities = fidelity_2x2_batch(apply_choi(choi, rho_q), apply_choi(choi, rho_qbar))
    mean, stderr = average_over_sphere(fidelities, nodes, sampling)
    logger.debug(f"F_CW({code.id}, gamma={gamma:.4g}) = {mean:.6g} over {len(nodes)} points")
    return OverlapResult(value=min(max(mean, 0.0), 1.0), stderr=stderr, n_points=len(nodes))


# Concurrence -----------------------------------------------------------------------

def wootters_concurrence(rho4: Operator) -> float:
    """
    Concurrence max(0, l1 - l2 - l3 - l4) of a two-qubit state.

    The l_i are square roots of the eigenvalues of rho rho~, taken from the Hermitian
    matrix sqrt(rho) rho~ sqrt(rho) which has the same spectrum.

    Raises:
        InvalidState: rho4 is not a valid density operator
        ShapeMismatch: rho4 is not 4x4
    """
    rho = _matrix(rho4)
    if rho.shape != (4, 4):
        raise ShapeMismatch(f"Concurrence needs a 4x4 state, got {rho.shape}")
    rho_tilde = SIGMA_YY @ rho.conj() @ SIGMA_YY
    root = _psd_sqrt(rho)
    product = root @ rho_tilde @ root
    vals = np.linalg.eigvalsh(0.5 * (product + product.conj().T))[::-1]
    floor = _CONCURRENCE_FLOOR * max(vals[0], 0.0)
    lambdas = np.sqrt(np.where(vals > floor, vals, 0.0))
    return float(min(max(lambdas[0] - lambdas[1:].sum(), 0.0), 1.0))


def bell_output(choi: np.ndarray) -> DensityOp:
    """(I x Phi)(|Phi+><Phi+|) with the kept qubit first."""
    return DensityOp((2, 2), 0.5 * np.asarray(choi))


def safeguarded_concurrence(code: CodeSpec, gamma: float) -> float:
    """Concurrence left when one half of a Bell pair is sent through the code."""
    return wootters_concurrence(bell_output(effective_channel(code, gamma)))


def find_esd_gamma(
    code: CodeSpec, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-10
) -> Optional[float]:
    """
    Smallest loss at which the safeguarded concurrence vanishes, by bisection.

    Returns:
        The sudden-death point within tol, or None when the concurrence is still
        positive at hi
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise InvalidParameter(f"Need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    if safeguarded_concurrence(code, hi) > 0.0:
        return None
    if safeguarded_concurrence(code, lo) == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if safeguarded_concurrence(code, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    logger.info(f"📊 {code.id}: entanglement sudden death at gamma={hi:.6f}")
    return hi


# Comparing the two figures of merit -------------------------------------------------

def _co_best(values: pd.Series, best: float, tolerance: float) -> set:
    return set(values.index[np.abs(values.to_numpy() - best) <= tolerance])


def ordering_concordance(
    table: pd.DataFrame,
    codes: Optional[Iterable[str]] = None,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
    tie_tolerance: float = 1e-9,
) -> ConcordanceReport:
    """
    Fraction of grid points where the best code by overlap is also best by concurrence.

    Codes within tie_tolerance of the best value count as co-best; a grid point agrees
    when the two co-best sets intersect.

    Args:
        table: Rows with columns parameter, code, f_cw, concurrence
        codes: Restrict the comparison to these codes
        lower, upper: Restrict the parameter range (inclusive)
    """
    frame = table
    if codes is not None:
        frame = frame[frame["code"].isin(list(codes))]
    if lower is not None:
        frame = frame[frame["parameter"] >= lower - 1e-12]
    if upper is not None:
        frame = frame[frame["parameter"] <= upper + 1e-12]
    if frame.empty:
        raise InvalidParameter("No rows left to compare")

    agreements = 0
    disagreements = []
    groups = list(frame.groupby("parameter", sort=True))
    for parameter, group in groups:
        indexed = group.set_index("code")
        by_overlap = _co_best(indexed["f_cw"], indexed["f_cw"].min(), tie_tolerance)
        by_concurrence = _co_best(
            indexed["concurrence"], indexed["concurrence"].max(), tie_tolerance
        )
        if by_overlap & by_concurrence:
            agreements += 1
        else:
            disagreements.append(float(parameter))

    return ConcordanceReport(
        fraction=agreements / len(groups), n_points=len(groups), disagreements=disagreements
    )


def find_crossings(
    grid: Sequence[float], a: Sequence[float], b: Sequence[float]
) -> list[tuple[float, float]]:
    """Grid intervals on which a - b changes sign."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if diff.shape != grid.shape:
        raise ShapeMismatch("grid, a and b must have equal length")
    signs = np.sign(diff)
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx]
