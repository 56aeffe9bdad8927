"""
Moderate-deviation (Gaussian) rates under long memory.

With θ = 2α − 1 the Riesz operator T_θ f(t) = ∫_0^1 |t−s|^{−θ} f(s) ds is
positive definite on L²[0, 1], and for G_Σ the integrated cumulant is the
quadratic form Λ^rl(ψ) = (σ²/2) ∫∫ ψ(t)·Σψ(s) |t−s|^{−θ} ds dt. On a
partition into cells this becomes (σ²/2) ψ·(M ⊗ Σ)ψ with the exact cell
Gram matrix M, so the rate Γ*_α is a finite-dimensional quadratic program.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from models.data_types import PartitionLevels, RateResult
from processes.noise import gaussian_conjugate
from rates.kernel import check_alpha, gaussian_sigma2
from shared.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

RIDGE = 1e-12
CLOSED_FORM_RTOL = 1e-6


class GaussianRateMode(str, Enum):
    VARIATIONAL = "variational"
    CLOSED_FORM = "closed_form"


def _riesz_potential(theta: float, u: np.ndarray) -> np.ndarray:
    """K(u) = |u|^{2−θ}/((1−θ)(2−θ)), so K'' = |u|^{−θ}."""
    return np.abs(u) ** (2.0 - theta) / ((1.0 - theta) * (2.0 - theta))


def _as_edges(cells: Union[int, Sequence[float]]) -> np.ndarray:
    if isinstance(cells, (int, np.integer)):
        if cells < 1:
            raise InvalidArgumentError("Need at least one cell")
        return np.linspace(0.0, 1.0, int(cells) + 1)
    edges = np.asarray(cells, dtype=float).reshape(-1)
    if edges[0] != 0.0:
        edges = np.concatenate(([0.0], edges))
    if np.any(np.diff(edges) <= 0.0):
        raise InvalidArgumentError("Cell edges must be strictly increasing")
    return edges


def riesz_gram(theta: float, cells: Union[int, Sequence[float]]) -> np.ndarray:
    """
    M_{ij} = ∫_{I_i}∫_{I_j} |t−s|^{−θ} ds dt for the m uniform cells of
    [0, 1] (or for the cells between the given edges), in closed form.
    """
    if not 0.0 < theta < 1.0:
        raise InvalidArgumentError(f"θ must lie in (0, 1), got {theta}")
    edges = _as_edges(cells)
    a, b = edges[:-1], edges[1:]
    K = lambda u: _riesz_potential(theta, u)  # noqa: E731
    gram = (
        K(b[None, :] - a[:, None])
        - K(b[None, :] - b[:, None])
        - K(a[None, :] - a[:, None])
        + K(a[None, :] - b[:, None])
    )
    return 0.5 * (gram + gram.T)


def riesz_apply(theta: float, values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """
    T_θ f at the points t for a step function f given by its values on m
    uniform cells (shape (m,) or (m, d)).
    """
    if not 0.0 < theta < 1.0:
        raise InvalidArgumentError(f"θ must lie in (0, 1), got {theta}")
    values = np.asarray(values, dtype=float)
    squeeze = values.ndim == 1
    if squeeze:
        values = values[:, None]
    m = values.shape[0]
    edges = np.linspace(0.0, 1.0, m + 1)
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    e = 1.0 - theta

    def antiderivative(u: np.ndarray) -> np.ndarray:
        return np.sign(u) * np.abs(u) ** e / e

    weights = antiderivative(edges[None, 1:] - t) - antiderivative(edges[None, :-1] - t)
    out = weights @ values
    return out[:, 0] if squeeze else out


@dataclass
class QuadraticSolution:
    value: float
    argmax: Optional[np.ndarray]
    flags: List[str] = field(default_factory=list)


def quadratic_conjugate(
    gram: np.ndarray, sigma: np.ndarray, scale: float, targets: np.ndarray
) -> QuadraticSolution:
    """
    sup_ψ {Σ_c ψ_c·w_c − (scale/2) ψ·(M ⊗ Σ)ψ} for targets w of shape (m, d).
    Infinite when some w_c has a component in Ker Σ.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    targets = np.asarray(targets, dtype=float).reshape(gram.shape[0], sigma.shape[0])
    eigval, eigvec = np.linalg.eigh(sigma)
    cutoff = RIDGE * max(float(eigval.max()), 0.0)
    rotated = targets @ eigvec
    null = eigval <= cutoff
    size = max(1.0, float(np.max(np.abs(targets))) if targets.size else 1.0)
    if np.any(null) and np.max(np.abs(rotated[:, null])) > 1e-12 * size:
        return QuadraticSolution(value=math.inf, argmax=None, flags=["kernel_component"])

    flags: List[str] = []
    try:
        factor = cho_factor(gram)
    except LinAlgError:
        ridge = RIDGE * float(np.trace(gram)) / gram.shape[0]
        logger.warning(f"Riesz Gram matrix is numerically singular; adding ridge {ridge:.3g}")
        factor = cho_factor(gram + ridge * np.eye(gram.shape[0]))
        flags.append("ridge")

    solution = np.zeros_like(rotated)
    value = 0.0
    for j in np.flatnonzero(~null):
        solved = cho_solve(factor, rotated[:, j])
        value += float(rotated[:, j] @ solved) / (2.0 * scale * eigval[j])
        solution[:, j] = solved / (scale * eigval[j])
    return QuadraticSolution(value=value, argmax=solution @ eigvec.T, flags=flags)


def gaussian_rl_value(
    sigma: np.ndarray, alpha: float, p: float, q: float, pl: PartitionLevels
) -> float:
    """Λ^rl for G_Σ in closed form: (σ²/2) Σ_ij M_ij λ_i·Σλ_j."""
    check_alpha(alpha)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if alpha == 1.0:
        return 0.5 * float(np.einsum("i,ij,jk,ik->", pl.lengths, pl.levels, sigma, pl.levels))
    gram = riesz_gram(2.0 * alpha - 1.0, pl.edges)
    s2 = gaussian_sigma2(alpha, p, q)
    return 0.5 * s2 * float(np.einsum("ij,ia,ab,jb->", gram, pl.levels, sigma, pl.levels))


def gaussian_rate_alpha(
    sigma: np.ndarray,
    alpha: float,
    phi: np.ndarray,
    mode: Union[GaussianRateMode, str] = GaussianRateMode.VARIATIONAL,
    p: float = 1.0,
    h: Optional[np.ndarray] = None,
) -> RateResult:
    """
    Γ*_α(φ) for G_Σ, φ given by its averages on m uniform cells (shape (m, d)).

    Variational: maximizes Σ_c ψ_c·∫_c φ − Λ^rl(ψ) over step functions ψ.
    ClosedForm: takes the h with Σ T_θ h = φ and returns (1/2σ²)∫ h·φ after
    checking the equation on the cells.
    """
    check_alpha(alpha)
    mode = GaussianRateMode(mode)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    phi = np.asarray(phi, dtype=float).reshape(-1, sigma.shape[0])
    m = phi.shape[0]
    q = 1.0 - p
    if alpha == 1.0:
        value = sum(gaussian_conjugate(sigma, row) for row in phi) / m
        return RateResult(value=value)

    theta = 2.0 * alpha - 1.0
    gram = riesz_gram(theta, m)
    s2 = gaussian_sigma2(alpha, p, q)
    if mode == GaussianRateMode.VARIATIONAL:
        solution = quadratic_conjugate(gram, sigma, s2, phi / m)
        return RateResult(value=solution.value, flags=solution.flags, argmax=solution.argmax)

    if h is None:
        raise InvalidArgumentError("closed_form mode needs the solution h of Σ T_θ h = φ")
    h = np.asarray(h, dtype=float).reshape(m, sigma.shape[0])
    if math.isinf(quadratic_conjugate(gram, sigma, s2, phi / m).value):
        return RateResult(value=math.inf, flags=["kernel_component"])
    implied = m * (gram @ h) @ sigma.T
    residual = np.linalg.norm(implied - phi) / max(np.linalg.norm(phi), 1e-300)
    if residual > CLOSED_FORM_RTOL:
        raise InvalidArgumentError(
            f"h does not solve Σ T_θ h = φ on the cells (relative residual {residual:.3g})"
        )
    value = float(np.sum(h * phi)) / (2.0 * s2 * m)
    return RateResult(value=value, argmax=h / s2)


def unit_cell_averages(theta: float, m: int, d: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """(h ≡ 1, cell averages of T_θ 1), a pair solving T_θ h = φ exactly."""
    gram = riesz_gram(theta, m)
    ones = np.ones((m, d))
    return ones, m * gram @ ones
