"""
Coherent-state qubits and their repetition code under photon loss.

States live in the orthonormal even/odd basis
    u = (|a> + |-a>) / (2 mu),   v = (|a> - |-a>) / (2 nu)
with mu^2 = (1 + e^{-2a^2}) / 2 and nu^2 = (1 - e^{-2a^2}) / 2, so that
|a> = mu u + nu v and |-a> = mu u - nu v. Loss shrinks the amplitude to
sqrt(1 - gamma) a and damps the coherence between |a> and |-a> by e^{-2 gamma a^2};
outputs are expressed in the basis of the shrunken amplitude.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import binom

from overlap.errors import InvalidParameter, ShapeMismatch
from overlap.fock import DensityOp, apply_channel, coherent_dim, coherent_vector, damping_kraus
from overlap.measures import (
    SphereNodes,
    average_over_sphere,
    fidelity_2x2_batch,
    sphere_nodes,
    wootters_concurrence,
)
from overlap.models import CatCode, CatInput, OverlapResult, SphereSampling

logger = logging.getLogger(__name__)

GateError = Callable[[float], float]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)

# Below this 2 alpha^2 the even/odd ratios are evaluated by their alpha -> 0 limits
_SMALL_EXPONENT = 1e-300
# Minimum normalization of an input before it counts as the zero vector
_MIN_NORM = 1e-14


@dataclass(frozen=True)
class CatBasis:
    """Even/odd cat basis at amplitude alpha."""
    alpha: float
    mu: float
    nu: float

    @classmethod
    def from_alpha(cls, alpha: float) -> "CatBasis":
        if alpha < 0 or not math.isfinite(alpha):
            raise InvalidParameter(f"alpha must be real and nonnegative, got {alpha}")
        nu_sq = -math.expm1(-2 * alpha * alpha) / 2
        return cls(alpha=alpha, mu=math.sqrt(1 - nu_sq), nu=math.sqrt(nu_sq))

    def change_of_basis(self) -> np.ndarray:
        """Columns give |alpha> and |-alpha> in (u, v) coordinates."""
        return np.array([[self.mu, self.mu], [self.nu, -self.nu]])


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameter(f"gamma must lie in [0, 1], got {gamma}")


def phase_flip_probability(alpha: float, gamma: float) -> float:
    """Per-mode u <-> v flip probability (1 - e^{-2 gamma alpha^2}) / 2."""
    _check_gamma(gamma)
    return -math.expm1(-2 * gamma * alpha * alpha) / 2


def logical_flip_probability(n_modes: int, p: float) -> float:
    """Probability that a majority of n_modes independent flips (each with probability p) occur."""
    if n_modes < 1 or n_modes % 2 == 0:
        raise InvalidParameter(f"n_modes must be odd and positive, got {n_modes}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p must lie in [0, 1], got {p}")
    return float(binom.sf(n_modes // 2, n_modes, p))


@dataclass(frozen=True)
class CatLossMap:
    """
    Loss acting on the (u, v) span, written through its six real coefficients.

    E(uu) = uu_uu u'u' + uu_vv v'v',  E(vv) = vv_uu u'u' + vv_vv v'v',
    E(uv) = uv_uv u'v' + uv_vu v'u'   (and E(vu) its adjoint).
    """
    alpha: float
    gamma: float
    alpha_out: float
    uu_uu: float
    uu_vv: float
    vv_uu: float
    vv_vv: float
    uv_uv: float
    uv_vu: float

    @classmethod
    def build(cls, alpha: float, gamma: float) -> "CatLossMap":
        _check_gamma(gamma)
        basis = CatBasis.from_alpha(alpha)
        alpha_out = math.sqrt(1 - gamma) * alpha
        out = CatBasis.from_alpha(alpha_out)

        exponent = 2 * alpha * alpha
        f = math.exp(-gamma * exponent)
        one_minus_f = -math.expm1(-gamma * exponent)
        if exponent < _SMALL_EXPONENT:
            loss_ratio, keep_ratio = gamma, 1 - gamma
        else:
            # (1 - f) / (2 nu^2) and nu'^2 / nu^2
            loss_ratio = math.expm1(-gamma * exponent) / math.expm1(-exponent)
            keep_ratio = math.expm1(-(1 - gamma) * exponent) / math.expm1(-exponent)

        mu_sq, mu_out_sq, nu_out_sq = basis.mu ** 2, out.mu ** 2, out.nu ** 2
        coherence = (out.mu / basis.mu) * math.sqrt(keep_ratio) / 2
        return cls(
            alpha=alpha,
            gamma=gamma,
            alpha_out=alpha_out,
            uu_uu=mu_out_sq * (1 + f) / (2 * mu_sq),
            uu_vv=nu_out_sq * one_minus_f / (2 * mu_sq),
            vv_uu=mu_out_sq * loss_ratio,
            vv_vv=keep_ratio * (1 + f) / 2,
            uv_uv=coherence * (1 + f),
            uv_vu=coherence * one_minus_f,
        )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Act on a 2x2 matrix or a stack of shape (..., 2, 2) in (u, v) coordinates."""
        rho = np.asarray(rho, dtype=complex)
        out = np.empty_like(rho)
        uu, uv, vu, vv = rho[..., 0, 0], rho[..., 0, 1], rho[..., 1, 0], rho[..., 1, 1]
        out[..., 0, 0] = self.uu_uu * uu + self.vv_uu * vv
        out[..., 1, 1] = self.uu_vv * uu + self.vv_vv * vv
        out[..., 0, 1] = self.uv_uv * uv + self.uv_vu * vu
        out[..., 1, 0] = self.uv_vu * uv + self.uv_uv * vu
        return out


def lossy_cat_mode(rho2: DensityOp, alpha: float, gamma: float) -> tuple[DensityOp, float]:
    """
    Send a state of span{|alpha>, |-alpha>} (given in the u, v basis) through loss.

    Returns:
        The output in the u, v basis of the new amplitude, and that amplitude
    """
    if rho2.dim != 2:
        raise ShapeMismatch(f"Expected a 2x2 state, got dimension {rho2.dim}")
    loss = CatLossMap.build(alpha, gamma)
    return DensityOp((2,), loss.apply(rho2.matrix)), loss.alpha_out


def cat_basis_vectors(alpha: float, dim: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Fock amplitudes of u and v at amplitude alpha > 0."""
    if alpha <= 0:
        raise InvalidParameter("The odd cat vector needs alpha > 0")
    dim = dim or coherent_dim(alpha)
    basis = CatBasis.from_alpha(alpha)
    plus = coherent_vector(alpha, dim).amplitudes
    minus = coherent_vector(-alpha, dim).amplitudes
    return (plus + minus) / (2 * basis.mu), (plus - minus) / (2 * basis.nu)


def cat_fock_oracle(rho2: DensityOp, alpha: float, gamma: float) -> DensityOp:
    """Reference for lossy_cat_mode through truncated Fock space and damping Kraus operators."""
    dim = coherent_dim(alpha)
    u, v = cat_basis_vectors(alpha, dim)
    frame = np.column_stack([u, v])
    fock = DensityOp((dim,), frame @ rho2.matrix @ frame.conj().T)
    damped = apply_channel(fock, [damping_kraus(gamma, dim)])

    alpha_out = math.sqrt(1 - gamma) * alpha
    if alpha_out == 0.0:
        # Everything ends in the vacuum, which is u at zero amplitude
        return DensityOp((2,), np.diag([np.trace(damped.matrix), 0.0]))
    u_out, v_out = cat_basis_vectors(alpha_out, dim)
    frame_out = np.column_stack([u_out, v_out])
    return DensityOp((2,), frame_out.conj().T @ damped.matrix @ frame_out)


# Inputs ------------------------------------------------------------------------------

def _uv_coordinates(alpha: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Normalized (u, v) coordinates of a|-alpha> + b|alpha>, stacked on the last axis."""
    basis = CatBasis.from_alpha(alpha)
    coords = np.stack([basis.mu * (a + b), basis.nu * (b - a)], axis=-1)
    norm = np.linalg.norm(coords, axis=-1, keepdims=True)
    if np.any(norm < _MIN_NORM):
        raise InvalidParameter(f"Input has vanishing normalization at alpha={alpha}")
    return coords / norm


def normalization(alpha: float, q: CatInput) -> float:
    """N(alpha) = 1 + 2 sqrt(w(1-w)) cos(theta) e^{-2 alpha^2}."""
    return 1 + 2 * math.sqrt(q.w * (1 - q.w)) * math.cos(q.theta) * math.exp(-2 * alpha * alpha)


def _input_pair(alpha: float, w: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Density stacks for each input and its logical antipode."""
    phase = np.exp(1j * np.asarray(theta))
    root_w, root_rest = np.sqrt(w) + 0j, np.sqrt(1 - np.asarray(w)) + 0j
    q = _uv_coordinates(alpha, root_w, phase * root_rest)
    qbar = _uv_coordinates(alpha, root_rest, -phase * root_w)
    return (
        np.einsum("...i,...j->...ij", q, q.conj()),
        np.einsum("...i,...j->...ij", qbar, qbar.conj()),
    )


def cat_input_state(alpha: float, q: CatInput) -> DensityOp:
    """The input as a 2x2 state in the (u, v) basis at amplitude alpha."""
    rho, _ = _input_pair(alpha, np.array(q.w), np.array(q.theta))
    return DensityOp((2,), rho)


# Pipelines ---------------------------------------------------------------------------

def cat_direct_pipeline(alpha: float, gamma: float, q: CatInput) -> DensityOp:
    """Unencoded transmission of a coherent-state qubit."""
    rho, _ = lossy_cat_mode(cat_input_state(alpha, q), alpha, gamma)
    return rho


def effective_flip_probability(
    alpha: float, gamma: float, gate_error: Optional[GateError] = None
) -> float:
    """Per-mode flip probability, combined with an independent gate error when given."""
    p = phase_flip_probability(alpha, gamma)
    if gate_error is None:
        return p
    g = float(gate_error(alpha))
    if not 0.0 <= g <= 1.0:
        raise InvalidParameter(f"gate_error returned {g}, expected a probability")
    return p + g - 2 * p * g


def overlap_limited_gate_error(scale: float) -> GateError:
    """
    Gate error set by how well |alpha> and |-alpha> can be told apart.

    g(alpha) = scale * exp(-2 alpha^2) / 2, so a scale of 1 makes the gates useless
    (g -> 1/2) as alpha -> 0 and harmless at large amplitude.
    """
    if not 0.0 <= scale <= 1.0:
        raise InvalidParameter(f"gate error scale must lie in [0, 1], got {scale}")

    def gate_error(alpha: float) -> float:
        return 0.5 * scale * float(np.exp(-2.0 * alpha ** 2))

    return gate_error


def _flip_channel(rho: np.ndarray, probability: float) -> np.ndarray:
    return (1 - probability) * rho + probability * (PAULI_X @ rho @ PAULI_X)


def gvr_pipeline(
    code: CatCode, gamma: float, q: CatInput, gate_error: Optional[GateError] = None
) -> DensityOp:
    """
    Repetition-coded transmission with ideal encoding and decoding gates.

    Each mode flips u <-> v independently; majority voting leaves a logical flip with
    probability logical_flip_probability(n_modes, p), and the result is read out as
    one cat qubit at amplitude sqrt(1 - gamma) alpha.
    """
    p_mode = effective_flip_probability(code.alpha, gamma, gate_error)
    p_logical = logical_flip_probability(code.n_modes, p_mode)
    rho = cat_input_state(code.alpha, q).matrix
    return DensityOp((2,), _flip_channel(rho, p_logical))


def _cat_output_map(code: CatCode, gamma: float, gate_error: Optional[GateError]):
    """The map a code applies to (u, v) states, acting on stacks (..., 2, 2)."""
    _check_gamma(gamma)
    if code.n_modes == 1 and gate_error is None:
        return CatLossMap.build(code.alpha, gamma).apply
    p_logical = logical_flip_probability(
        code.n_modes, effective_flip_probability(code.alpha, gamma, gate_error)
    )
    return lambda rho: _flip_channel(rho, p_logical)


def cat_codeword_overlap(
    code: CatCode,
    gamma: float,
    sampling: Optional[SphereSampling] = None,
    gate_error: Optional[GateError] = None,
) -> OverlapResult:
    """
    Average output fidelity of logically antipodal coherent-state inputs.

    The sphere polar angle maps to the weight w = cos^2(w_sphere / 2) of |-alpha>.
    A single mode without gate error is sent through the exact loss map; everything
    else uses the flip model of gvr_pipeline.
    """
    sampling = sampling or SphereSampling()
    nodes: SphereNodes = sphere_nodes(sampling)
    rho_q, rho_qbar = _input_pair(code.alpha, np.cos(nodes.w / 2) ** 2, nodes.theta)
    channel = _cat_output_map(code, gamma, gate_error)
    fidelities = fidelity_2x2_batch(channel(rho_q), channel(rho_qbar))
    mean, stderr = average_over_sphere(fidelities, nodes, sampling)
    logger.debug(
        f"F_CW({code.code_id}, alpha={code.alpha:.4g}, gamma={gamma:.4g}) = {mean:.6g}"
    )
    return OverlapResult(value=min(max(mean, 0.0), 1.0), stderr=stderr, n_points=len(nodes))


def entangled_cat_pair() -> np.ndarray:
    """(|alpha, alpha> - |-alpha, -alpha>) normalized, which is (uv + vu) / sqrt(2)."""
    psi = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
    return np.outer(psi, psi.conj())


def cat_concurrence(
    code: CatCode, gamma: float, gate_error: Optional[GateError] = None
) -> float:
    """Concurrence after the second half of the entangled cat pair goes through the code."""
    channel = _cat_output_map(code, gamma, gate_error)
    # blocks[i, j] is the (a, b) block of the second mode for first-mode indices i, j
    blocks = entangled_cat_pair().reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)
    out = channel(blocks).transpose(0, 2, 1, 3).reshape(4, 4)
    return wootters_concurrence(DensityOp((2, 2), out))
