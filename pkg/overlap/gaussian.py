"""
Gaussian states and channels in the covariance-matrix picture.

Convention: quadratures are ordered (x_1, p_1, x_2, p_2, ...) and the vacuum has
covariance matrix equal to the identity. A channel acts as sigma -> M sigma M^T + N,
d -> M d. The single-mode fidelity used throughout is the closed form
    F = 2 / (sqrt(Delta + delta) - sqrt(delta)),
    Delta = det(sigma_1 + sigma_2),  delta = (det sigma_1 - 1)(det sigma_2 - 1),
which equals the square of the root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.linalg import expm
from tqdm import tqdm

from overlap.config import settings
from overlap.errors import (
    ContractError,
    InvalidParameter,
    InvalidState,
    ShapeMismatch,
    UnsupportedOperation,
)
from overlap.fock import DensityOp
from overlap.models import NogoReport, NogoStratum

logger = logging.getLogger(__name__)

J1 = np.array([[0.0, -1.0], [1.0, 0.0]])
LAMBDA = np.diag([1.0, -1.0])

CM_TOLERANCE = 1e-10
CPTP_TOLERANCE = 1e-12

ChannelKind = Literal["interior", "boundary", "symplectic"]
CHANNEL_KINDS: tuple[str, ...] = ("interior", "boundary", "symplectic")
# verify_nogo cycles through this pattern when no single kind is requested
_MIXED_PATTERN: tuple[str, ...] = ("interior", "interior", "interior", "boundary", "symplectic")
_CHUNK = 10_000


def symplectic_form(n_modes: int) -> np.ndarray:
    """J_n, the direct sum of n copies of [[0, -1], [1, 0]]."""
    if n_modes < 1:
        raise InvalidParameter(f"n_modes must be positive, got {n_modes}")
    return np.kron(np.eye(n_modes), J1)


def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix and displacement of an n-mode Gaussian state."""
    cm: np.ndarray = field(repr=False)
    disp: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        cm = np.asarray(self.cm, dtype=float)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
            raise ShapeMismatch(f"Covariance matrix must be square and even, got {cm.shape}")
        disp = np.zeros(cm.shape[0]) if self.disp is None else np.asarray(self.disp, dtype=float)
        if disp.shape != (cm.shape[0],):
            raise ShapeMismatch(f"Displacement of shape {disp.shape} for a {cm.shape} matrix")
        object.__setattr__(self, "cm", cm)
        object.__setattr__(self, "disp", disp)

    @property
    def n_modes(self) -> int:
        return self.cm.shape[0] // 2


@dataclass(frozen=True)
class GaussianChannel:
    """Gaussian channel sigma -> M sigma M^T + N."""
    m: np.ndarray = field(repr=False)
    n_mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        n_mat = np.asarray(self.n_mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 or m.shape != n_mat.shape:
            raise ShapeMismatch(f"M {m.shape} and N {n_mat.shape} must be equal, square and even")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_mat", n_mat)

    @property
    def n_modes(self) -> int:
        return self.m.shape[0] // 2


@dataclass(frozen=True)
class StateCheck:
    """Outcome of validate_state."""
    valid: bool
    min_eigenvalue: float
    asymmetry: float

    def __bool__(self) -> bool:
        return self.valid


def validate_state(s: GaussianState, tolerance: float = CM_TOLERANCE) -> StateCheck:
    """Check sigma = sigma^T and sigma + iJ >= 0 (the uncertainty principle)."""
    asymmetry = float(np.max(np.abs(s.cm - s.cm.T)))
    sym = 0.5 * (s.cm + s.cm.T)
    min_eig = float(np.linalg.eigvalsh(sym + 1j * symplectic_form(s.n_modes))[0])
    return StateCheck(
        valid=asymmetry <= tolerance and min_eig >= -tolerance,
        min_eigenvalue=min_eig,
        asymmetry=asymmetry,
    )


def is_cptp(c: GaussianChannel) -> bool:
    """
    Complete positivity of a Gaussian channel.

    Single mode: N >= 0 and det N >= (det M - 1)^2. Several modes: N + i(J - M J M^T) >= 0.
    """
    if np.max(np.abs(c.n_mat - c.n_mat.T)) > CM_TOLERANCE:
        return False
    if c.n_modes == 1:
        if np.linalg.eigvalsh(c.n_mat)[0] < -CPTP_TOLERANCE:
            return False
        return bool(_det2(c.n_mat) >= (_det2(c.m) - 1) ** 2 - CPTP_TOLERANCE)
    j = symplectic_form(c.n_modes)
    condition = c.n_mat + 1j * (j - c.m @ j @ c.m.T)
    return bool(np.linalg.eigvalsh(condition)[0] >= -CPTP_TOLERANCE)


def apply(c: GaussianChannel, s: GaussianState) -> GaussianState:
    """
    Act with the channel on the state.

    Raises:
        ShapeMismatch: mode numbers differ
        ContractError: the channel is not completely positive
    """
    if c.n_modes != s.n_modes:
        raise ShapeMismatch(f"{c.n_modes}-mode channel on a {s.n_modes}-mode state")
    if not is_cptp(c):
        raise ContractError("Channel violates the complete-positivity condition")
    return GaussianState(c.m @ s.cm @ c.m.T + c.n_mat, c.m @ s.disp)


# Fidelity -------------------------------------------------------------------------

def scutaru_fidelity(cm1: np.ndarray, cm2: np.ndarray) -> np.ndarray:
    """Closed-form fidelity over stacks of single-mode covariance matrices (..., 2, 2)."""
    big_delta = _det2(cm1 + cm2)
    small_delta = np.maximum(_det2(cm1) - 1.0, 0.0) * np.maximum(_det2(cm2) - 1.0, 0.0)
    # 2 / (sqrt(D + d) - sqrt(d)) without the cancellation in the denominator
    return 2.0 * (np.sqrt(big_delta + small_delta) + np.sqrt(small_delta)) / big_delta


def _single_mode_pair(s1: GaussianState, s2: GaussianState) -> None:
    if s1.n_modes != 1 or s2.n_modes != 1:
        raise UnsupportedOperation("The closed-form Gaussian fidelity is single-mode only")
    if np.any(s1.disp != 0) or np.any(s2.disp != 0):
        raise UnsupportedOperation("Displaced states are not supported by the fidelity paths")
    for s in (s1, s2):
        check = validate_state(s)
        if not check:
            raise InvalidState(f"Invalid covariance matrix: min eigenvalue {check.min_eigenvalue:.3e}")


def gaussian_fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """
    Fidelity of two zero-mean single-mode Gaussian states.

    Raises:
        UnsupportedOperation: multi-mode or displaced input
        InvalidState: a covariance matrix violates the uncertainty principle
    """
    _single_mode_pair(s1, s2)
    return float(scutaru_fidelity(s1.cm, s2.cm))


def fidelity_after_channel(s1: GaussianState, s2: GaussianState, c: GaussianChannel) -> float:
    """Fidelity of the two states after both went through c."""
    _single_mode_pair(s1, s2)
    return gaussian_fidelity(apply(c, s1), apply(c, s2))


# Constructors ---------------------------------------------------------------------

def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.eye(2 * n_modes))


def thermal_state(nbar: float) -> GaussianState:
    if nbar < 0:
        raise InvalidParameter(f"nbar must be nonnegative, got {nbar}")
    return GaussianState((2 * nbar + 1) * np.eye(2))


def squeezed_thermal_state(nbar: float, r: float, phi: float = 0.0) -> GaussianState:
    """R(phi)^T diag((2 nbar + 1) e^{2r}, (2 nbar + 1) e^{-2r}) R(phi)."""
    if nbar < 0:
        raise InvalidParameter(f"nbar must be nonnegative, got {nbar}")
    rot = rotation(phi)
    core = (2 * nbar + 1) * np.diag([math.exp(2 * r), math.exp(-2 * r)])
    return GaussianState(rot.T @ core @ rot)


def loss_channel(gamma: float) -> GaussianChannel:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameter(f"gamma must lie in [0, 1], got {gamma}")
    return GaussianChannel(math.sqrt(1 - gamma) * np.eye(2), gamma * np.eye(2))


def amplifier_channel(gain: float) -> GaussianChannel:
    """Quantum-limited amplifier with M = sqrt(g) I, N = (g - 1) I."""
    if gain < 1:
        raise InvalidParameter(f"gain must be at least 1, got {gain}")
    return GaussianChannel(math.sqrt(gain) * np.eye(2), (gain - 1) * np.eye(2))


def classical_noise_channel(noise: float) -> GaussianChannel:
    if noise < 0:
        raise InvalidParameter(f"noise must be nonnegative, got {noise}")
    return GaussianChannel(np.eye(2), noise * np.eye(2))


def symplectic_channel(s: float, phi1: float = 0.0, phi2: float = 0.0) -> GaussianChannel:
    """Gaussian unitary R(phi1) diag(e^s, e^-s) R(phi2)."""
    m = rotation(phi1) @ np.diag([math.exp(s), math.exp(-s)]) @ rotation(phi2)
    return GaussianChannel(m, np.zeros((2, 2)))


def tmss_cm(r: float) -> GaussianState:
    """Two-mode squeezed vacuum [[cosh r I, sinh r Lambda], [sinh r Lambda, cosh r I]]."""
    if r < 0:
        raise InvalidParameter(f"r must be nonnegative, got {r}")
    a, c = math.cosh(r) * np.eye(2), math.sinh(r) * LAMBDA
    return GaussianState(np.block([[a, c], [c, a]]))


def choi_cm(c: GaussianChannel, r: float) -> GaussianState:
    """Covariance matrix of the channel applied to one half of tmss_cm(r)."""
    if c.n_modes != 1:
        raise UnsupportedOperation("choi_cm is defined for single-mode channels")
    if r < 0:
        raise InvalidParameter(f"r must be nonnegative, got {r}")
    a, cr = math.cosh(r) * np.eye(2), math.sinh(r) * LAMBDA
    m, n_mat = c.m, c.n_mat
    return GaussianState(np.block([[m.T @ a @ m + n_mat, m.T @ cr], [cr @ m, a]]))


# Normal form ----------------------------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """
    M = post @ channel.m @ pre with post a rotation and pre symplectic.

    When preserves_fidelity is set, the fidelity of states s1, s2 after the original
    channel equals the fidelity of pre s1 pre^T, pre s2 pre^T after the normal-form
    channel. It is unset for a rank-one M, whose output still depends on the input
    along the surviving direction while the normal form forgets the input entirely.
    """
    channel: GaussianChannel
    eta: float
    pre: np.ndarray = field(repr=False)
    post: np.ndarray = field(repr=False)
    preserves_fidelity: bool = True

    def transform_input(self, s: GaussianState) -> GaussianState:
        return GaussianState(self.pre @ s.cm @ self.pre.T, self.pre @ s.disp)


def channel_normal_form(c: GaussianChannel) -> NormalForm:
    """
    Reduce a single-mode channel to M' = eta I (eta = sqrt|det M|) by symplectics.

    A negative det M cannot be removed by symplectic maps; its sign is carried by the
    reflection diag(1, -1), giving M' = eta diag(1, -1) with det M' = det M. When
    det M = 0 the normal form is the noise-replacement channel M' = 0. For M = 0 that is
    exact; for a rank-one M the surviving term s0^2 (v^T S v) w w^T of M S M^T is dropped
    and the result is flagged with preserves_fidelity = False.
    """
    if c.n_modes != 1:
        raise UnsupportedOperation("The normal form is implemented for single-mode channels")

    u, s, vt = np.linalg.svd(c.m)
    signs = np.ones(2)
    if np.linalg.det(u) < 0:
        u = u @ LAMBDA
        signs[1] *= -1
    if np.linalg.det(vt) < 0:
        vt = LAMBDA @ vt
        signs[1] *= -1

    rank_one = False
    if s[1] <= np.finfo(float).eps * max(s[0], 1.0):
        eta, m_prime, pre = 0.0, np.zeros((2, 2)), vt
        rank_one = s[0] > np.finfo(float).eps
    else:
        eta = math.sqrt(s[0] * s[1])
        squeeze = np.diag([math.sqrt(s[0] / s[1]), math.sqrt(s[1] / s[0])])
        m_prime = eta * np.diag(signs)
        pre = squeeze @ vt

    n_prime = u.T @ c.n_mat @ u
    logger.debug(f"Normal form: eta={eta:.6g}, det M sign {signs[1]:+.0f}")
    if rank_one:
        logger.warning(f"Rank-one M (singular values {s[0]:.3g}, {s[1]:.1e}) reduced to M' = 0")
    return NormalForm(
        GaussianChannel(m_prime, 0.5 * (n_prime + n_prime.T)),
        eta,
        preserves_fidelity=not rank_one,
        pre=pre,
        post=u,
    )


# Randomized no-go verification -----------------------------------------------------

def sample_state_cms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Random valid single-mode covariance matrices, shape (size, 2, 2)."""
    nbar = rng.uniform(0.0, 3.0, size)
    r = rng.uniform(0.0, 1.5, size)
    phi = rng.uniform(0.0, np.pi, size)
    nu = 2 * nbar + 1
    c, s = np.cos(phi), np.sin(phi)
    rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    core = np.zeros((size, 2, 2))
    core[:, 0, 0] = nu * np.exp(2 * r)
    core[:, 1, 1] = nu * np.exp(-2 * r)
    return np.einsum("nji,njk,nkl->nil", rot, core, rot)


def sample_channel_mats(
    rng: np.random.Generator, size: int, kind: ChannelKind = "interior"
) -> tuple[np.ndarray, np.ndarray]:
    """
    Random single-mode CPTP channels as stacks (M, N) of shape (size, 2, 2).

    interior: M uniform in [-2, 2]^4, N = O^T diag(n1, n2) O with n1 n2 >= (det M - 1)^2
    boundary: as interior with n1 n2 = (det M - 1)^2 exactly
    symplectic: M = R diag(e^s, e^-s) R', N = 0
    """
    if kind not in CHANNEL_KINDS:
        raise InvalidParameter(f"Unknown channel kind '{kind}'")

    def rotations(angles: np.ndarray) -> np.ndarray:
        c, s = np.cos(angles), np.sin(angles)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)

    if kind == "symplectic":
        squeeze = rng.uniform(-1.0, 1.0, size)
        core = np.zeros((size, 2, 2))
        core[:, 0, 0] = np.exp(squeeze)
        core[:, 1, 1] = np.exp(-squeeze)
        m = rotations(rng.uniform(0, 2 * np.pi, size)) @ core @ rotations(
            rng.uniform(0, 2 * np.pi, size)
        )
        return m, np.zeros((size, 2, 2))

    m = rng.uniform(-2.0, 2.0, (size, 2, 2))
    root = np.abs(_det2(m) - 1.0)
    tilt = np.exp(rng.uniform(-1.0, 1.0, size))
    if kind == "boundary":
        n1, n2 = root * tilt, root / tilt
    else:
        scale = rng.uniform(1.0, 2.0, size)
        n1 = root * tilt * scale + rng.uniform(0.0, 0.5, size)
        n2 = root / tilt * scale + rng.uniform(0.0, 0.5, size)
    core = np.zeros((size, 2, 2))
    core[:, 0, 0] = n1
    core[:, 1, 1] = n2
    o = rotations(rng.uniform(0, 2 * np.pi, size))
    n_mat = np.einsum("nji,njk,nkl->nil", o, core, o)
    return m, n_mat


def sample_state(rng: np.random.Generator) -> GaussianState:
    return GaussianState(sample_state_cms(rng, 1)[0])


def sample_channel(rng: np.random.Generator, kind: ChannelKind = "interior") -> GaussianChannel:
    m, n_mat = sample_channel_mats(rng, 1, kind)
    return GaussianChannel(m[0], n_mat[0])


def _stratum(margins: np.ndarray, tolerance: float) -> NogoStratum:
    if margins.size == 0:
        return NogoStratum()
    return NogoStratum(
        samples=int(margins.size),
        min_margin=float(margins.min()),
        max_abs_margin=float(np.abs(margins).max()),
        violations=int(np.count_nonzero(margins < -tolerance)),
    )


def verify_nogo(
    n_samples: int,
    seed: int,
    kind: Optional[ChannelKind] = None,
    tolerance: Optional[float] = None,
) -> NogoReport:
    """
    Search for a CPTP Gaussian channel that increases the distinguishability of two states.

    Every sample draws two random states and one random channel and records the margin
    F' - F between the fidelity after and before the channel. A margin below -tolerance
    is a violation. Statistics are reported per channel kind and per |det M| case
    (equal to, above or below one).

    Args:
        n_samples: Number of (state, state, channel) triples
        seed: Seed of the numpy generator; equal seeds give equal reports
        kind: Restrict channels to one kind; by default interior, boundary and
            symplectic channels are mixed 3:1:1

    Margins are taken on the sampled channel itself, never on its normal form, so
    singular M (the det = 0 part of the "less" stratum) is checked as drawn.
    """
    if n_samples < 1:
        raise InvalidParameter(f"n_samples must be positive, got {n_samples}")
    tol = settings.nogo_tolerance if tolerance is None else tolerance
    rng = np.random.default_rng(seed)

    if kind is None:
        kinds = np.array([_MIXED_PATTERN[i % len(_MIXED_PATTERN)] for i in range(n_samples)])
    else:
        kinds = np.full(n_samples, kind)

    cm1 = sample_state_cms(rng, n_samples)
    cm2 = sample_state_cms(rng, n_samples)
    m = np.empty((n_samples, 2, 2))
    n_mat = np.empty((n_samples, 2, 2))
    for channel_kind in CHANNEL_KINDS:
        idx = np.nonzero(kinds == channel_kind)[0]
        if idx.size:
            m[idx], n_mat[idx] = sample_channel_mats(rng, idx.size, channel_kind)

    margins = np.empty(n_samples)
    starts = range(0, n_samples, _CHUNK)
    for start in tqdm(starts, desc="No-go samples", unit="chunk", disable=not settings.progress):
        sl = slice(start, start + _CHUNK)
        before = scutaru_fidelity(cm1[sl], cm2[sl])
        out1 = m[sl] @ cm1[sl] @ np.swapaxes(m[sl], -1, -2) + n_mat[sl]
        out2 = m[sl] @ cm2[sl] @ np.swapaxes(m[sl], -1, -2) + n_mat[sl]
        margins[sl] = scutaru_fidelity(out1, out2) - before

    abs_det = np.abs(_det2(m))
    unit = np.abs(abs_det - 1.0) <= tol
    by_det = {
        "unit": _stratum(margins[unit], tol),
        "greater": _stratum(margins[~unit & (abs_det > 1.0)], tol),
        "less": _stratum(margins[~unit & (abs_det < 1.0)], tol),
    }
    by_kind = {k: _stratum(margins[kinds == k], tol) for k in CHANNEL_KINDS if np.any(kinds == k)}

    report = NogoReport(
        samples=n_samples,
        seed=seed,
        kind=kind or "mixed",
        min_margin=float(margins.min()),
        violations=int(np.count_nonzero(margins < -tol)),
        by_det=by_det,
        by_kind=by_kind,
    )
    if report.violations:
        logger.error(f"❌ {report.violations} no-go violations, min margin {report.min_margin:.3e}")
    else:
        logger.info(f"✅ No violations in {n_samples} samples (min margin {report.min_margin:.3e})")
    return report


# Fock-space reference ----------------------------------------------------------------

def fock_density(state: GaussianState, dim: int) -> DensityOp:
    """
    Truncated Fock density operator of a zero-mean single-mode Gaussian state.

    The state is built as rotation . squeezing . thermal on a space twice as large,
    then cropped to dim and renormalized.
    """
    if state.n_modes != 1:
        raise UnsupportedOperation("fock_density handles single-mode states")
    if np.any(state.disp != 0):
        raise UnsupportedOperation("fock_density handles zero-mean states")
    check = validate_state(state)
    if not check:
        raise InvalidState(f"Invalid covariance matrix: min eigenvalue {check.min_eigenvalue:.3e}")
    if dim < 2:
        raise InvalidParameter(f"dim must be at least 2, got {dim}")

    vals, vecs = np.linalg.eigh(0.5 * (state.cm + state.cm.T))
    if np.linalg.det(vecs) < 0:
        vecs[:, 1] *= -1
    phi = math.atan2(vecs[1, 0], vecs[0, 0])
    nu = math.sqrt(vals[0] * vals[1])
    r = 0.25 * math.log(vals[1] / vals[0])
    nbar = max((nu - 1.0) / 2.0, 0.0)

    big = 2 * dim
    n = np.arange(big)
    a = np.diag(np.sqrt(n[1:].astype(float)), 1)
    squeeze = expm(0.5 * r * (a @ a - a.T @ a.T))
    thermal = np.diag(nbar ** n / (nbar + 1) ** (n + 1))
    rot = np.diag(np.exp(1j * phi * n))
    full = rot @ squeeze @ thermal @ squeeze.conj().T @ rot.conj().T

    cropped = full[:dim, :dim]
    return DensityOp((dim,), cropped / np.trace(cropped).real)
