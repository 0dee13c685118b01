"""
Discrete-variable photonic codes under amplitude damping.

Each code couples an encoding of the logical qubit into Fock space with a decoding
procedure. Decoders are written as Kraus maps R_j from the code's Fock space onto a
qubit plus an erasure branch: whatever weight sum_j R_j^dag R_j does not capture is
replaced by the maximally mixed qubit. This keeps every recovery trace preserving and
covers the dual-rail "output the mixed qubit" rule as well as the bosonic fallback.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from overlap import cache
from overlap.config import settings
from overlap.errors import InvalidParameter, UnsupportedOperation
from overlap.fock import (
    DensityOp,
    FockVector,
    apply_channel_to_operator,
    basis_vector,
    damping_kraus,
    multimode_kraus,
)
from overlap.models import CODE_IDS, BlochInput

logger = logging.getLogger(__name__)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

ClosedForm = Callable[[float, float, float], np.ndarray]


@dataclass(frozen=True)
class CodeSpec:
    """A named encoding with its decoding maps and optional analytic output."""
    id: str
    mode_dims: tuple[int, ...]
    logical_zero: FockVector = field(repr=False)
    logical_one: FockVector = field(repr=False)
    decoders: Optional[tuple[np.ndarray, ...]] = field(default=None, repr=False)
    closed_form: Optional[ClosedForm] = field(default=None, repr=False)

    def __post_init__(self):
        tol = settings.identity_tolerance
        for name, vec in (("logical_zero", self.logical_zero), ("logical_one", self.logical_one)):
            if abs(vec.norm() - 1.0) > tol:
                raise InvalidParameter(f"{self.id}: {name} is not normalized")
        if abs(self.logical_zero.inner(self.logical_one)) > tol:
            raise InvalidParameter(f"{self.id}: codewords are not orthogonal")

    @property
    def isometry(self) -> np.ndarray:
        """Encoding V = |0_L><0| + |1_L><1| as a (D, 2) matrix."""
        return np.column_stack([self.logical_zero.amplitudes, self.logical_one.amplitudes])

    @property
    def simulated(self) -> bool:
        return self.decoders is not None


# Logical inputs ---------------------------------------------------------------

def antipode(q: BlochInput) -> BlochInput:
    """The orthogonal partner sin(w/2)|0> - e^{i theta} cos(w/2)|1>."""
    return BlochInput(w=math.pi - q.w, theta=(q.theta + math.pi) % (2 * math.pi))


def logical_state(q: BlochInput) -> np.ndarray:
    return np.array([math.cos(q.w / 2), np.exp(1j * q.theta) * math.sin(q.w / 2)])


def bloch_vector(q: BlochInput) -> np.ndarray:
    return np.array([
        math.sin(q.w) * math.cos(q.theta),
        math.sin(q.w) * math.sin(q.theta),
        math.cos(q.w),
    ])


# Closed-form decoded outputs ----------------------------------------------------
# Each returns rho_Q(gamma, w, theta); the output for the antipode is the same
# expression evaluated at the antipode.

def _direct_output(gamma: float, w: float, theta: float) -> np.ndarray:
    c, s = math.cos(w), math.sin(w)
    off = np.exp(-1j * theta) * math.sqrt(1 - gamma) * s
    return 0.5 * np.array([
        [1 + gamma + c - gamma * c, off],
        [np.conj(off), (gamma - 1) * (c - 1)],
    ])


def _dual_rail_output(gamma: float, w: float, theta: float) -> np.ndarray:
    """
    Depolarized input, with |0_L> = |01> (photon in the second rail) and |1_L> = |10>.

    The opposite labelling conjugates the output by X, which changes neither the
    overlap nor the concurrence.
    """
    c, s = math.cos(w), math.sin(w)
    off = np.exp(-1j * theta) * (1 - gamma) * s
    return 0.5 * np.array([
        [1 + (1 - gamma) * c, off],
        [np.conj(off), 1 - (1 - gamma) * c],
    ])


def _three_qubit_output(gamma: float, w: float, theta: float) -> np.ndarray:
    p = gamma
    c, s = math.cos(w), math.sin(w)
    kept = (1 - p) ** 2 * (1 + 2 * p)
    off = np.exp(-1j * theta) * (1 - p) ** 1.5 * s
    return 0.5 * np.array([
        [1 + (3 - 2 * p) * p ** 2 + kept * c, off],
        [np.conj(off), kept * (1 - c)],
    ])


def bosonic_contraction(gamma: float) -> float:
    """Probability (1-gamma)^3 (1+3 gamma) that at most one photon is lost."""
    return (1 - gamma) ** 3 * (1 + 3 * gamma)


def _bosonic_output(gamma: float, w: float, theta: float) -> np.ndarray:
    k = bosonic_contraction(gamma)
    c, s = math.cos(w), math.sin(w)
    off = np.exp(-1j * theta) * k * s
    return 0.5 * np.array([[1 + k * c, off], [np.conj(off), 1 - k * c]])


def _four_qubit_output(gamma: float, w: float, theta: float) -> np.ndarray:
    g = gamma
    c, s = math.cos(w), math.sin(w)
    kept = (g - 1) ** 2 * (1 + 2 * g)
    upper = 0.25 * np.exp(1j * theta) * (
        g ** 2 - g ** 3 + np.exp(-2j * theta) * (2 + g ** 2 * (3 * g - 5))
    ) * s
    lower = 0.25 * np.exp(-1j * theta) * (
        g ** 2 - g ** 3 + np.exp(2j * theta) * (2 + g ** 2 * (3 * g - 5))
    ) * s
    return np.array([
        [0.5 * (1 + g ** 2 * (2 * g - 1) + kept * c), upper],
        [lower, 0.5 * (1 + g ** 2 - 2 * g ** 3 - kept * c)],
    ])


# Code registry -------------------------------------------------------------------

def _ket(occupations, dims) -> np.ndarray:
    return basis_vector(occupations, dims).amplitudes


def _decoder(pairs, dims) -> np.ndarray:
    """Sum of |m><ket| over (logical value m, Fock ket amplitudes) pairs."""
    size = math.prod(dims)
    op = np.zeros((2, size), dtype=complex)
    for m, ket in pairs:
        op[m] += ket.conj()
    return op


def _build_direct() -> CodeSpec:
    dims = (2,)
    return CodeSpec(
        id="direct",
        mode_dims=dims,
        logical_zero=basis_vector([0], dims),
        logical_one=basis_vector([1], dims),
        decoders=(np.eye(2, dtype=complex),),
        closed_form=_direct_output,
    )


def _build_dual_rail() -> CodeSpec:
    dims = (2, 2)
    # One surviving photon decodes by position; the vacuum falls into the erasure branch
    decoder = _decoder([(0, _ket([0, 1], dims)), (1, _ket([1, 0], dims))], dims)
    return CodeSpec(
        id="dual_rail",
        mode_dims=dims,
        logical_zero=basis_vector([0, 1], dims),
        logical_one=basis_vector([1, 0], dims),
        decoders=(decoder,),
        closed_form=_dual_rail_output,
    )


def _build_three_qubit() -> CodeSpec:
    dims = (2, 2, 2)
    decoders = []
    # Syndrome "no flip" plus one flipped position each; majority value is decoded
    for flip in (None, 0, 1, 2):
        zero = [0, 0, 0]
        one = [1, 1, 1]
        if flip is not None:
            zero[flip] ^= 1
            one[flip] ^= 1
        decoders.append(_decoder([(0, _ket(zero, dims)), (1, _ket(one, dims))], dims))
    return CodeSpec(
        id="three_qubit",
        mode_dims=dims,
        logical_zero=basis_vector([0, 0, 0], dims),
        logical_one=basis_vector([1, 1, 1], dims),
        decoders=tuple(decoders),
        closed_form=_three_qubit_output,
    )


def _build_bosonic() -> CodeSpec:
    dims = (5, 5)
    zero = (_ket([4, 0], dims) + _ket([0, 4], dims)) / math.sqrt(2)
    one = _ket([2, 2], dims)
    decoders = (
        # No loss
        _decoder([(0, zero), (1, one)], dims),
        # One photon lost from the first or the second mode
        _decoder([(0, _ket([3, 0], dims)), (1, _ket([1, 2], dims))], dims),
        _decoder([(0, _ket([0, 3], dims)), (1, _ket([2, 1], dims))], dims),
    )
    return CodeSpec(
        id="bosonic",
        mode_dims=dims,
        logical_zero=FockVector(dims, zero),
        logical_one=FockVector(dims, one),
        decoders=decoders,
        closed_form=_bosonic_output,
    )


def _build_four_qubit() -> CodeSpec:
    dims = (2, 2, 2, 2)
    zero = (_ket([0, 0, 0, 0], dims) + _ket([1, 1, 1, 1], dims)) / math.sqrt(2)
    one = (_ket([0, 0, 1, 1], dims) + _ket([1, 1, 0, 0], dims)) / math.sqrt(2)
    return CodeSpec(
        id="four_qubit_approx",
        mode_dims=dims,
        logical_zero=FockVector(dims, zero),
        logical_one=FockVector(dims, one),
        decoders=None,
        closed_form=_four_qubit_output,
    )


CODES: dict[str, CodeSpec] = {
    code.id: code
    for code in (
        _build_direct(),
        _build_dual_rail(),
        _build_three_qubit(),
        _build_bosonic(),
        _build_four_qubit(),
    )
}


def get_code(code_id: str) -> CodeSpec:
    """
    Look up a code by id.

    Raises:
        InvalidParameter: unknown id
    """
    try:
        return CODES[code_id]
    except KeyError:
        raise InvalidParameter(
            f"Unknown code '{code_id}', expected one of {', '.join(CODE_IDS)}"
        ) from None


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameter(f"gamma must lie in [0, 1], got {gamma}")


# Simulation ------------------------------------------------------------------------

def encode(code: CodeSpec, q: BlochInput) -> FockVector:
    """cos(w/2)|0_L> + e^{i theta} sin(w/2)|1_L>."""
    return FockVector(code.mode_dims, code.isometry @ logical_state(q))


def _decode(code: CodeSpec, matrix: np.ndarray) -> np.ndarray:
    out = np.zeros((2, 2), dtype=complex)
    captured = np.zeros_like(matrix)
    for r in code.decoders:
        out += r @ matrix @ r.conj().T
        captured += r.conj().T @ r
    erased = np.trace(matrix) - np.trace(captured @ matrix)
    return out + 0.5 * erased * PAULI_I


def _transmit_operator(code: CodeSpec, gamma: float, matrix: np.ndarray) -> np.ndarray:
    """Encode, damp every mode, decode; linear in the logical operator."""
    if not code.simulated:
        raise UnsupportedOperation(
            f"{code.id} has no Fock-level recovery; use closed_form_output or effective_channel"
        )
    v = code.isometry
    encoded = v @ matrix @ v.conj().T
    kraus = [damping_kraus(gamma, d) for d in code.mode_dims]
    damped, _ = apply_channel_to_operator(encoded, code.mode_dims, kraus)
    return _decode(code, damped)


def transmit_and_decode(code: CodeSpec, gamma: float, q: BlochInput) -> DensityOp:
    """
    Send the encoded input through per-mode amplitude damping and decode it.

    Raises:
        InvalidParameter: gamma outside [0, 1]
        UnsupportedOperation: the code is only known through its closed form
    """
    _check_gamma(gamma)
    psi = logical_state(q)
    out = _transmit_operator(code, gamma, np.outer(psi, psi.conj()))
    return DensityOp((2,), out)


def transcription_defect(code: CodeSpec, gamma: float, q: BlochInput) -> float:
    """Max-norm of rho - rho^dag for the closed form as written."""
    raw = code.closed_form(gamma, q.w, q.theta)
    return float(np.max(np.abs(raw - raw.conj().T)))


def closed_form_output(
    code: CodeSpec, gamma: float, q: BlochInput, which: Literal["Q", "Qbar"] = "Q"
) -> DensityOp:
    """Analytic decoded output for the input (which="Q") or its antipode (which="Qbar")."""
    _check_gamma(gamma)
    if code.closed_form is None:
        raise UnsupportedOperation(f"{code.id} has no closed form")
    if which not in ("Q", "Qbar"):
        raise InvalidParameter(f"which must be 'Q' or 'Qbar', got {which!r}")
    point = q if which == "Q" else antipode(q)
    raw = code.closed_form(gamma, point.w, point.theta)
    if code.id == "four_qubit_approx":
        defect = float(np.max(np.abs(raw - raw.conj().T)))
        logger.debug(f"{code.id} closed form at gamma={gamma:.4g}: Hermiticity defect {defect:.2e}")
        raw = 0.5 * (raw + raw.conj().T)
    return DensityOp((2,), raw)


# Effective qubit channels ----------------------------------------------------------

def _matrix_unit(i: int, j: int) -> np.ndarray:
    unit = np.zeros((2, 2), dtype=complex)
    unit[i, j] = 1.0
    return unit


def apply_choi(choi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """
    Act with the channel whose Choi matrix is sum_ij |i><j| x Phi(|i><j|).

    rho may be a single 2x2 matrix or a stack of shape (..., 2, 2).
    """
    blocks = np.asarray(choi).reshape(2, 2, 2, 2)
    return np.einsum("...ij,iajb->...ab", rho, blocks)


def choi_from_affine(t_matrix: np.ndarray, t_vector: np.ndarray) -> np.ndarray:
    """Choi matrix of the Bloch map r -> T r + t."""
    images = {
        "I": PAULI_I + sum(t_vector[a] * PAULIS[a] for a in range(3)),
    }
    for b, name in enumerate("XYZ"):
        images[name] = sum(t_matrix[a, b] * PAULIS[a] for a in range(3))
    units = {
        (0, 0): 0.5 * (images["I"] + images["Z"]),
        (1, 1): 0.5 * (images["I"] - images["Z"]),
        (0, 1): 0.5 * (images["X"] + 1j * images["Y"]),
        (1, 0): 0.5 * (images["X"] - 1j * images["Y"]),
    }
    return sum(np.kron(_matrix_unit(i, j), image) for (i, j), image in units.items())


def bloch_representation(choi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Affine form (T, t) of a qubit channel given by its Choi matrix."""
    t_matrix = np.empty((3, 3))
    for b, sigma_b in enumerate(PAULIS):
        image = apply_choi(choi, sigma_b)
        for a, sigma_a in enumerate(PAULIS):
            t_matrix[a, b] = 0.5 * np.trace(sigma_a @ image).real
    image_i = apply_choi(choi, PAULI_I)
    t_vector = np.array([0.5 * np.trace(s @ image_i).real for s in PAULIS])
    return t_matrix, t_vector


PAULI_EIGENSTATES: dict[str, BlochInput] = {
    "+z": BlochInput(w=0.0, theta=0.0),
    "-z": BlochInput(w=math.pi, theta=0.0),
    "+x": BlochInput(w=math.pi / 2, theta=0.0),
    "-x": BlochInput(w=math.pi / 2, theta=math.pi),
    "+y": BlochInput(w=math.pi / 2, theta=math.pi / 2),
    "-y": BlochInput(w=math.pi / 2, theta=3 * math.pi / 2),
}


def fit_affine(output: Callable[[BlochInput], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Fit r -> T r + t from outputs on the six Pauli eigenstates."""
    def bloch(rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(s @ rho).real for s in PAULIS])

    t_matrix = np.empty((3, 3))
    offsets = []
    for b, axis in enumerate("xyz"):
        plus = bloch(output(PAULI_EIGENSTATES[f"+{axis}"]))
        minus = bloch(output(PAULI_EIGENSTATES[f"-{axis}"]))
        t_matrix[:, b] = 0.5 * (plus - minus)
        offsets.append(0.5 * (plus + minus))
    return t_matrix, np.mean(offsets, axis=0)


def effective_channel(code: CodeSpec, gamma: float) -> np.ndarray:
    """
    4x4 Choi matrix sum_ij |i><j| x Phi(|i><j|) of encode, damp and decode.

    Codes without a Fock-level recovery are represented by the affine map fitted
    to their closed-form outputs.
    """
    _check_gamma(gamma)
    cached = cache.get_cached_channel(code.id, gamma)
    if cached is not None:
        return cached

    if code.simulated:
        choi = sum(
            np.kron(_matrix_unit(i, j), _transmit_operator(code, gamma, _matrix_unit(i, j)))
            for i in range(2)
            for j in range(2)
        )
    else:
        t_matrix, t_vector = fit_affine(lambda q: closed_form_output(code, gamma, q).matrix)
        choi = choi_from_affine(t_matrix, t_vector)

    cache.set_cached_channel(code.id, gamma, choi)
    return choi


# Knill-Laflamme overlaps -----------------------------------------------------------

@dataclass(frozen=True)
class KLAnalysis:
    """Overlaps <chi_i|A_k^dag A_l|chi_j> and what they say about the code."""
    matrix: np.ndarray = field(repr=False)
    labels: tuple[tuple[int, ...], ...]
    sector_weights: dict[int, tuple[float, float]]
    max_deformation: float
    max_off_diagonal: float
    deformable: bool


def kl_matrix(code: CodeSpec, gamma: float, max_loss: Optional[int] = None) -> KLAnalysis:
    """
    Knill-Laflamme overlap tensor of shape (2, 2, K, K).

    Deformability is judged per loss sector: the weights
    lambda_i(l) = sum_{|k| = l} <chi_i|A_k^dag A_k|chi_i> must agree between the two
    codewords for every total loss l. A code whose codewords shrink unequally in some
    sector is flagged deformable.

    Args:
        code: Code to analyse
        gamma: Loss parameter
        max_loss: Keep only Kraus products removing at most this many photons in total
    """
    _check_gamma(gamma)
    kraus = [damping_kraus(gamma, d) for d in code.mode_dims]
    terms = multimode_kraus(kraus, max_loss=max_loss)
    labels = tuple(index for index, _ in terms)
    images = np.stack([op @ code.isometry for _, op in terms])  # (K, D, 2)

    # overlaps[i, j, k, l] = <chi_i| A_k^dag A_l |chi_j>
    overlaps = np.einsum("kdi,ldj->ijkl", images.conj(), images)

    sector_weights: dict[int, tuple[float, float]] = {}
    for pos, index in enumerate(labels):
        loss = sum(index)
        w0, w1 = sector_weights.get(loss, (0.0, 0.0))
        sector_weights[loss] = (
            w0 + overlaps[0, 0, pos, pos].real,
            w1 + overlaps[1, 1, pos, pos].real,
        )

    max_deformation = max(abs(w0 - w1) for w0, w1 in sector_weights.values())
    max_off_diagonal = float(
        max(np.max(np.abs(overlaps[0, 1])), np.max(np.abs(overlaps[1, 0])))
    )
    deformable = bool(max_deformation > settings.identity_tolerance)
    logger.debug(
        f"{code.id} at gamma={gamma:.4g}: deformation {max_deformation:.2e}, "
        f"off-diagonal {max_off_diagonal:.2e}"
    )
    return KLAnalysis(
        matrix=overlaps,
        labels=labels,
        sector_weights=dict(sorted(sector_weights.items())),
        max_deformation=float(max_deformation),
        max_off_diagonal=max_off_diagonal,
        deformable=deformable,
    )
