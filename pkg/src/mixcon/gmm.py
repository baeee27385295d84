"""Isotropic Gaussian mixtures with scalar-broadcast component means.

Each of the ``C`` components places its mean at ``mu_k * ones(dim)`` and
uses covariance ``var_k * I``, so a mixture is fully described by three
length-``C`` vectors plus the ambient dimension.  With that structure the
integral of a product of two component densities has a closed form,

    integral N(z; a, va I) N(z; b, vb I) dz
        = (2 pi (va + vb)) ** (-dim / 2) * exp(-dim (a - b)^2 / (2 (va + vb)))

which makes mixture overlap, and a correlation-style similarity built
from it, cheap and exact.  Monte Carlo estimators for the same integrals
are provided as diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError

WEIGHT_SUM_TOL = 1e-9
VARIANCE_FLOOR = 1.0


@dataclass(frozen=True)
class IsoGaussianMixture:
    """Validated parameter bundle for one mixture."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    dim: int

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        shapes = {self.weights.shape, self.means.shape, self.variances.shape}
        if len(shapes) != 1 or self.weights.ndim != 1 or self.weights.size < 1:
            raise InputError("weights, means and variances must be equal-length 1-d arrays")
        for name in ("weights", "means", "variances"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericError(f"non-finite entries in {name}")
        if np.any(self.weights < 0.0):
            raise InputError("mixture weights must be non-negative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InputError(f"mixture weights sum to {total!r}, expected 1")
        if np.any(self.variances < VARIANCE_FLOOR):
            raise InputError(f"variances must be >= {VARIANCE_FLOOR}")

    @property
    def num_components(self) -> int:
        return int(self.weights.size)


def _as_points(gmm: IsoGaussianMixture, z) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.ndim != 2 or z.shape[1] != gmm.dim:
        raise InputError(f"points must have trailing dimension {gmm.dim}")
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite evaluation point")
    return z, single


def _log_density_matrix(gmm: IsoGaussianMixture, points: np.ndarray) -> np.ndarray:
    """Per-point log density, (m,) for (m, dim) input."""
    sq = np.sum((points[:, None, :] - gmm.means[None, :, None]) ** 2, axis=2)
    comp = -0.5 * gmm.dim * np.log(2.0 * np.pi * gmm.variances)[None, :] - sq / (
        2.0 * gmm.variances[None, :]
    )
    with np.errstate(divide="ignore"):
        logw = np.log(gmm.weights)[None, :]
    a = logw + comp
    shift = np.max(a, axis=1, keepdims=True)
    return np.log(np.sum(np.exp(a - shift), axis=1)) + shift[:, 0]


def log_density(gmm: IsoGaussianMixture, z):
    """Log mixture density at ``z`` ((dim,) -> float, (m, dim) -> (m,)).

    Computed with a max-shifted log-sum-exp, so the result stays finite
    far into the tails where ``density`` itself would underflow.
    Components with zero weight are skipped by the shift arithmetic.
    """
    points, single = _as_points(gmm, z)
    out = _log_density_matrix(gmm, points)
    return float(out[0]) if single else out


def density(gmm: IsoGaussianMixture, z):
    """Mixture density at ``z``; positive wherever exp(log density) does not underflow."""
    points, single = _as_points(gmm, z)
    out = np.exp(_log_density_matrix(gmm, points))
    return float(out[0]) if single else out


def gaussian_cross_integral(mu_a: float, var_a: float, mu_b: float, var_b: float, dim: int) -> float:
    """Closed-form integral of the product of two isotropic Gaussian densities."""
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InputError(f"dim must be a positive integer, got {dim!r}")
    mu_a, var_a, mu_b, var_b = (float(v) for v in (mu_a, var_a, mu_b, var_b))
    for v in (mu_a, var_a, mu_b, var_b):
        if not np.isfinite(v):
            raise NumericError("non-finite Gaussian parameter")
    if var_a <= 0.0 or var_b <= 0.0:
        raise InputError("variances must be positive")
    total_var = var_a + var_b
    delta = mu_a - mu_b
    return float(
        (2.0 * np.pi * total_var) ** (-0.5 * dim)
        * np.exp(-dim * delta * delta / (2.0 * total_var))
    )


def _mixture_key(gmm: IsoGaussianMixture) -> tuple:
    return (
        gmm.dim,
        gmm.weights.tobytes(),
        gmm.means.tobytes(),
        gmm.variances.tobytes(),
    )


def mixture_cross_integral(p: IsoGaussianMixture, q: IsoGaussianMixture) -> float:
    """integral p(z) q(z) dz via the pairwise component closed form.

    The operand order is canonicalized before summation so the result is
    bitwise identical under argument swap.
    """
    if p.dim != q.dim:
        raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if _mixture_key(p) > _mixture_key(q):
        p, q = q, p
    total_var = p.variances[:, None] + q.variances[None, :]
    delta = p.means[:, None] - q.means[None, :]
    pair = (2.0 * np.pi * total_var) ** (-0.5 * p.dim) * np.exp(
        -p.dim * delta * delta / (2.0 * total_var)
    )
    return float(np.sum(p.weights[:, None] * q.weights[None, :] * pair))


def correlation_coefficient(p: IsoGaussianMixture, q: IsoGaussianMixture) -> float:
    """Cross integral normalized by the geometric mean of the self integrals.

    Lies in (0, 1] up to rounding, with 1 exactly when p == q.
    """
    cross = mixture_cross_integral(p, q)
    self_p = mixture_cross_integral(p, p)
    self_q = mixture_cross_integral(q, q)
    denom = np.sqrt(self_p * self_q)
    if denom == 0.0 or not np.isfinite(denom):
        raise NumericError("self-overlap normalizer underflowed")
    return float(cross / denom)


def sample(gmm: IsoGaussianMixture, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` points, (size, dim)."""
    if size < 1:
        raise InputError("size must be >= 1")
    component = rng.choice(gmm.num_components, size=size, p=gmm.weights / gmm.weights.sum())
    noise = rng.standard_normal((size, gmm.dim))
    return gmm.means[component][:, None] + np.sqrt(gmm.variances[component])[:, None] * noise


def _mc_mean_se(values: np.ndarray) -> tuple[float, float]:
    estimate = float(values.mean())
    if values.size < 2:
        return estimate, float("inf")
    return estimate, float(values.std(ddof=1) / np.sqrt(values.size))


def mc_cross_integral(
    p: IsoGaussianMixture, q: IsoGaussianMixture, samples: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of the cross integral as E_{z~p}[q(z)].

    Returns (estimate, standard error); the standard error is ``inf``
    for a single sample.  Deterministic per seed.
    """
    if p.dim != q.dim:
        raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    points = sample(p, samples, rng)
    return _mc_mean_se(density(q, points))


def bhattacharyya_coefficient_mc(
    p: IsoGaussianMixture, q: IsoGaussianMixture, samples: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of integral sqrt(p q) as E_{z~p}[sqrt(q/p)].

    Diagnostic only: no closed form exists for mixtures, and the
    estimator is not differentiable, so it never feeds training.
    """
    if p.dim != q.dim:
        raise InputError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    points = sample(p, samples, rng)
    ratio = np.exp(0.5 * (_log_density_matrix(q, points) - _log_density_matrix(p, points)))
    return _mc_mean_se(ratio)
