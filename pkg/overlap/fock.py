"""
Truncated Fock-space states and channel application.

States carry the per-mode truncation dimensions alongside their amplitudes so that
multi-mode operations (tensor products, partial traces, local channels) can reshape
them without extra bookkeeping. Everything here is a pure function of its inputs.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import comb, gammaln
from scipy.stats import poisson

from overlap.config import settings
from overlap.errors import InvalidParameter, InvalidState, ShapeMismatch, TruncationError

logger = logging.getLogger(__name__)


def _as_dims(mode_dims: Iterable[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in mode_dims)
    if not dims or any(d < 1 for d in dims):
        raise InvalidParameter(f"Mode dimensions must be positive, got {dims}")
    return dims


@dataclass(frozen=True)
class StateDiagnostic:
    """Physicality figures of a density operator."""
    hermiticity_defect: float
    trace_error: float
    min_eigenvalue: float
    tolerance: float

    @property
    def valid(self) -> bool:
        return (
            self.hermiticity_defect <= self.tolerance
            and self.trace_error <= self.tolerance
            and self.min_eigenvalue >= -self.tolerance
        )


@dataclass(frozen=True)
class FockVector:
    """Ket over a product of truncated Fock spaces."""
    mode_dims: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _as_dims(self.mode_dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ShapeMismatch(
                f"Vector of length {amps.size} does not match mode dims {dims}"
            )
        object.__setattr__(self, "mode_dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockVector":
        norm = self.norm()
        if norm == 0.0:
            raise InvalidState("Cannot normalize the zero vector")
        return FockVector(self.mode_dims, self.amplitudes / norm)

    def inner(self, other: "FockVector") -> complex:
        """<self|other>."""
        if self.mode_dims != other.mode_dims:
            raise ShapeMismatch(f"Mode dims differ: {self.mode_dims} vs {other.mode_dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "DensityOp":
        return DensityOp(self.mode_dims, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOp:
    """Density operator over a product of truncated Fock spaces."""
    mode_dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _as_dims(self.mode_dims)
        mat = np.asarray(self.matrix, dtype=complex)
        side = math.prod(dims)
        if mat.shape != (side, side):
            raise ShapeMismatch(f"Matrix of shape {mat.shape} does not match mode dims {dims}")
        object.__setattr__(self, "mode_dims", dims)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_vector(cls, vector: FockVector) -> "DensityOp":
        return vector.projector()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def diagnose(self, tolerance: Optional[float] = None) -> StateDiagnostic:
        tol = settings.state_tolerance if tolerance is None else tolerance
        hermitian = 0.5 * (self.matrix + self.matrix.conj().T)
        return StateDiagnostic(
            hermiticity_defect=float(np.max(np.abs(self.matrix - self.matrix.conj().T))),
            trace_error=float(abs(self.trace() - 1.0)),
            min_eigenvalue=float(np.linalg.eigvalsh(hermitian)[0]),
            tolerance=tol,
        )

    def validate(self, tolerance: Optional[float] = None) -> "DensityOp":
        """
        Check Hermiticity, unit trace and positivity.

        Returns:
            self, for chaining

        Raises:
            InvalidState: naming the first offending quantity
        """
        diag = self.diagnose(tolerance)
        if diag.hermiticity_defect > diag.tolerance:
            raise InvalidState(f"Density operator not Hermitian: defect {diag.hermiticity_defect:.3e}")
        if diag.trace_error > diag.tolerance:
            raise InvalidState(f"Density operator trace off by {diag.trace_error:.3e}")
        if diag.min_eigenvalue < -diag.tolerance:
            raise InvalidState(f"Density operator has eigenvalue {diag.min_eigenvalue:.3e}")
        return self


@dataclass(frozen=True)
class KrausSet:
    """Single-mode channel decomposition A_0 .. A_{K-1}."""
    operators: tuple[np.ndarray, ...] = field(repr=False)
    gamma: Optional[float] = None

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=complex) for op in self.operators)
        if not ops:
            raise InvalidParameter("A Kraus set needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2 or any(op.shape != shape for op in ops):
            raise ShapeMismatch("Kraus operators must be matrices of a common shape")
        object.__setattr__(self, "operators", ops)

    @property
    def input_dim(self) -> int:
        return self.operators[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_defect(self) -> float:
        """Max-norm distance of sum A^dag A from the identity."""
        total = sum(op.conj().T @ op for op in self.operators)
        return float(np.max(np.abs(total - np.eye(self.input_dim))))


def basis_vector(occupations: Sequence[int], mode_dims: Sequence[int]) -> FockVector:
    """Product Fock ket |n_1 ... n_m>."""
    dims = _as_dims(mode_dims)
    if len(occupations) != len(dims):
        raise ShapeMismatch(f"{len(occupations)} occupations for {len(dims)} modes")
    for n, d in zip(occupations, dims):
        if not 0 <= n < d:
            raise InvalidParameter(f"Occupation {n} outside truncation {d}")
    amps = np.zeros(math.prod(dims), dtype=complex)
    amps[np.ravel_multi_index(tuple(occupations), dims)] = 1.0
    return FockVector(dims, amps)


def damping_kraus(gamma: float, dim: int) -> KrausSet:
    """
    Amplitude-damping (photon loss) Kraus operators on a truncated mode.

    A_k maps |n> to sqrt(C(n, k) (1-gamma)^(n-k) gamma^k) |n-k>, so A_k removes k photons.

    Args:
        gamma: Loss probability per photon, in [0, 1]
        dim: Truncation dimension of the mode

    Raises:
        InvalidParameter: gamma or dim out of range
    """
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameter(f"gamma must lie in [0, 1], got {gamma}")
    if dim < 1:
        raise InvalidParameter(f"dim must be positive, got {dim}")

    operators = []
    for k in range(dim):
        op = np.zeros((dim, dim))
        for n in range(k, dim):
            op[n - k, n] = math.sqrt(comb(n, k, exact=True) * (1 - gamma) ** (n - k) * gamma ** k)
        operators.append(op)
    return KrausSet(tuple(operators), gamma=gamma)


def multimode_kraus(
    per_mode_kraus: Sequence[KrausSet], max_loss: Optional[int] = None
) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """
    Tensor products of single-mode Kraus operators.

    Args:
        per_mode_kraus: One Kraus set per mode
        max_loss: Keep only multi-indices whose entries sum to at most this value

    Returns:
        (multi-index, operator) pairs in lexicographic order of the multi-index
    """
    ranges = [range(len(ks.operators)) for ks in per_mode_kraus]
    result = []
    for index in itertools.product(*ranges):
        if max_loss is not None and sum(index) > max_loss:
            continue
        op = np.ones((1, 1), dtype=complex)
        for ks, k in zip(per_mode_kraus, index):
            op = np.kron(op, ks.operators[k])
        result.append((index, op))
    return result


def _apply_local(matrix: np.ndarray, dims: tuple[int, ...], mode: int, kraus: KrausSet):
    """Sum_k (I x A_k x I) X (I x A_k x I)^dag for an operator X on the given dims."""
    n = len(dims)
    tensor = matrix.reshape(dims + dims)
    out_dims = dims[:mode] + (kraus.output_dim,) + dims[mode + 1:]
    out = np.zeros(out_dims + out_dims, dtype=complex)
    for op in kraus.operators:
        x = np.moveaxis(np.tensordot(op, tensor, axes=([1], [mode])), 0, mode)
        x = np.moveaxis(np.tensordot(x, op.conj(), axes=([n + mode], [1])), -1, n + mode)
        out += x
    side = math.prod(out_dims)
    return out.reshape(side, side), out_dims


def apply_channel_to_operator(
    matrix: np.ndarray, mode_dims: Sequence[int], per_mode_kraus: Sequence[KrausSet]
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Linear action of independent per-mode channels on any operator (no validation)."""
    dims = _as_dims(mode_dims)
    if len(per_mode_kraus) != len(dims):
        raise ShapeMismatch(f"{len(per_mode_kraus)} Kraus sets for {len(dims)} modes")
    for mode, (d, ks) in enumerate(zip(dims, per_mode_kraus)):
        if ks.input_dim != d:
            raise ShapeMismatch(f"Mode {mode} has dim {d} but Kraus input dim {ks.input_dim}")

    out = np.asarray(matrix, dtype=complex)
    for mode, ks in enumerate(per_mode_kraus):
        out, dims = _apply_local(out, dims, mode, ks)
    return out, dims


def apply_channel(rho: DensityOp, per_mode_kraus: Sequence[KrausSet]) -> DensityOp:
    """
    Apply one channel per mode, acting independently on each mode.

    Raises:
        ShapeMismatch: wrong number of Kraus sets or mismatched dimensions
    """
    out, dims = apply_channel_to_operator(rho.matrix, rho.mode_dims, per_mode_kraus)
    return DensityOp(dims, out)


def tensor(a: Union[FockVector, DensityOp], b: Union[FockVector, DensityOp]):
    """Kronecker product with concatenated mode dimensions."""
    if isinstance(a, FockVector) and isinstance(b, FockVector):
        return FockVector(a.mode_dims + b.mode_dims, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOp) and isinstance(b, DensityOp):
        return DensityOp(a.mode_dims + b.mode_dims, np.kron(a.matrix, b.matrix))
    raise ShapeMismatch(f"Cannot tensor {type(a).__name__} with {type(b).__name__}")


def partial_trace(rho: DensityOp, keep: Iterable[int]) -> DensityOp:
    """
    Reduced state on the modes in keep (returned in their original order).

    Raises:
        InvalidParameter: empty keep set or a mode index out of range
    """
    n = len(rho.mode_dims)
    keep_set = set(keep)
    if not keep_set or any(not 0 <= m < n for m in keep_set):
        raise InvalidParameter(f"Invalid modes to keep {sorted(keep_set)} for {n} modes")

    tensor_ = rho.matrix.reshape(rho.mode_dims + rho.mode_dims)
    current = n
    for mode in sorted(set(range(n)) - keep_set, reverse=True):
        tensor_ = np.trace(tensor_, axis1=mode, axis2=mode + current)
        current -= 1

    kept_dims = tuple(rho.mode_dims[m] for m in sorted(keep_set))
    side = math.prod(kept_dims)
    return DensityOp(kept_dims, tensor_.reshape(side, side))


def coherent_dim(alpha: complex) -> int:
    """Truncation ceil(|alpha|^2 + 8|alpha| + 10) used for coherent states."""
    r = abs(alpha)
    return int(math.ceil(r * r + 8 * r + 10))


def coherent_vector(alpha: complex, dim: int) -> FockVector:
    """
    Fock expansion of the coherent state |alpha>, renormalized after truncation.

    Raises:
        TruncationError: when the photon-number tail beyond dim exceeds the
            configured bound; carries the recommended dimension
    """
    if dim < 1:
        raise InvalidParameter(f"dim must be positive, got {dim}")
    r = abs(alpha)
    if r == 0.0:
        return basis_vector([0], [dim])

    tail = float(poisson.sf(dim - 1, r * r))
    if tail > settings.coherent_tail:
        required = max(coherent_dim(alpha), dim + 1)
        raise TruncationError(
            f"dim={dim} leaves a tail of {tail:.2e} for |alpha|={r:.4g}", required_dim=required
        )

    n = np.arange(dim)
    log_mod = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))
    return FockVector((dim,), amps).normalized()
