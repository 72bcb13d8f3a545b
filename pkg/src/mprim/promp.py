"""Probabilistic movement primitives over the normalized Gaussian basis.

A joint trajectory q is modelled as q_t = psi_t . theta (+ noise). Weights
are fit per joint by ridge-regularized least squares; a Gaussian over the
weights gives a trajectory distribution whose per-sample marginals and
samples are available here, together with the mean/residual weight
decomposition used by the residual trainer.
"""

from dataclasses import dataclass, field

import numpy as np

from mprim.basis import PhaseConfig, PhiMatrix
from mprim.errors import SingularSystemError

DEFAULT_RIDGE = 1e-6
DEFAULT_OBS_NOISE_VAR = 1e-4  # rad^2, used for sampling only
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Trajectory:
    """Joint positions over time, shape (T, n_joint), radians."""

    values: np.ndarray
    phase_cfg: PhaseConfig

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError("trajectory values must be (T, n_joint)")
        if v.shape[0] != self.phase_cfg.duration_samples:
            raise ValueError(
                f"trajectory has {v.shape[0]} samples but phase config "
                f"declares {self.phase_cfg.duration_samples}")
        if not np.all(np.isfinite(v)):
            raise ValueError("trajectory values must be finite")

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_joint(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class PrompWeights:
    """Basis weights for every joint, shape (n_joint, n_basis)."""

    per_joint: np.ndarray

    def __post_init__(self):
        if self.per_joint.ndim != 2:
            raise ValueError("weights must be (n_joint, n_basis)")

    @property
    def n_joint(self):
        return self.per_joint.shape[0]

    @property
    def n_basis(self):
        return self.per_joint.shape[1]


@dataclass(frozen=True)
class PrompDistribution:
    """Gaussian over one joint's weights plus scalar observation noise."""

    mean: np.ndarray
    covariance: np.ndarray
    obs_noise_var: float = DEFAULT_OBS_NOISE_VAR

    def __post_init__(self):
        c = self.covariance
        if c.shape != (self.mean.shape[0],) * 2:
            raise ValueError("covariance shape must match mean")
        if np.max(np.abs(c - c.T)) > 1e-10:
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(c).min() < -1e-10:
            raise ValueError("covariance must be positive semi-definite")
        if self.obs_noise_var < 0:
            raise ValueError("obs_noise_var must be >= 0")


@dataclass(frozen=True)
class ResidualWeights:
    """Weight vector split into a shared mean and a per-demo residual.

    `residual` is the correctly rounded difference theta - mean. A single
    float64 cannot always carry that difference exactly, so the rounding
    error of the subtraction is kept in `residual_lo`; the combine step
    folds it back in, which makes the round trip reproduce theta
    bit-for-bit.
    """

    mean_weights: np.ndarray
    residual: np.ndarray
    residual_lo: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.mean_weights.shape != self.residual.shape:
            raise ValueError("mean and residual must have equal length")
        if self.residual_lo is None:
            object.__setattr__(self, "residual_lo",
                               np.zeros_like(self.residual))


def fit_weights(traj_joint, phi: PhiMatrix, ridge: float = DEFAULT_RIDGE):
    """Ridge least-squares weights for one joint's trajectory.

    Solves (ridge*I + Phi^T Phi) theta = Phi^T q. With ridge == 0 a
    rank-deficient basis matrix is rejected instead of silently producing
    garbage.
    """
    q = np.asarray(traj_joint, dtype=float)
    if q.ndim != 1 or q.shape[0] != phi.n_samples:
        raise ValueError(
            f"trajectory length {q.shape} does not match basis matrix rows "
            f"{phi.n_samples}")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    gram = phi.values.T @ phi.values + ridge * np.eye(phi.n_basis)
    if ridge == 0.0:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > _MAX_CONDITION:
            raise SingularSystemError(
                f"normal matrix condition number {cond:.3e} exceeds "
                f"{_MAX_CONDITION:.0e} with ridge=0; the basis matrix is "
                "rank deficient, use a positive ridge")
    return np.linalg.solve(gram, phi.values.T @ q)


def fit_all_weights(traj: Trajectory, phi: PhiMatrix,
                    ridge: float = DEFAULT_RIDGE) -> PrompWeights:
    """fit_weights for every joint of a trajectory."""
    per_joint = np.stack(
        [fit_weights(traj.values[:, j], phi, ridge)
         for j in range(traj.n_joint)])
    return PrompWeights(per_joint)


def reconstruct(weights: PrompWeights, phi: PhiMatrix,
                phase_cfg: PhaseConfig) -> Trajectory:
    """Noise-free trajectory generated by the weights: column j = Phi theta_j."""
    if weights.n_basis != phi.n_basis:
        raise ValueError(
            f"weights have {weights.n_basis} bases, matrix has {phi.n_basis}")
    # one matrix-vector product per joint, the same expression marginal_at
    # uses, so the marginal mean equals the reconstruction bit-for-bit
    columns = [phi.values @ theta for theta in weights.per_joint]
    return Trajectory(np.column_stack(columns), phase_cfg)


def mean_weights(all_weights):
    """Element-wise mean of a non-empty list of weight vectors."""
    if len(all_weights) == 0:
        raise ValueError("cannot average an empty list of weight vectors")
    stacked = np.stack([np.asarray(w, dtype=float) for w in all_weights])
    return stacked.mean(axis=0)


def fit_distribution(all_weights, obs_noise_var: float = DEFAULT_OBS_NOISE_VAR
                     ) -> PrompDistribution:
    """Gaussian over weights: sample mean and unbiased sample covariance."""
    if len(all_weights) < 2:
        raise ValueError("need at least 2 weight vectors for a covariance")
    stacked = np.stack([np.asarray(w, dtype=float) for w in all_weights])
    mean = stacked.mean(axis=0)
    cov = np.cov(stacked, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = 0.5 * (cov + cov.T)
    return PrompDistribution(mean, cov, obs_noise_var)


def marginal_at(t, dist: PrompDistribution, phi: PhiMatrix):
    """Per-sample marginal (mean, variance) of the trajectory distribution."""
    psi = phi.values[t]
    mean = float((phi.values @ dist.mean)[t])
    var = float(dist.obs_noise_var + psi @ dist.covariance @ psi)
    return mean, max(var, 0.0)


def _covariance_factor(cov):
    # symmetric eigendecomposition; near-PSD inputs get their slightly
    # negative eigenvalues clamped to zero
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def sample_trajectory(dist: PrompDistribution, phi: PhiMatrix, seed: int):
    """One trajectory draw: a single weight sample plus i.i.d. noise per step."""
    return sample_trajectories(dist, phi, 1, seed)[0]


def sample_trajectories(dist: PrompDistribution, phi: PhiMatrix, n: int,
                        seed: int):
    """n independent draws, shape (n, T). Deterministic per seed."""
    rng = np.random.default_rng(seed)
    factor = _covariance_factor(dist.covariance)
    thetas = dist.mean + rng.standard_normal((n, dist.mean.shape[0])) @ factor.T
    clean = thetas @ phi.values.T
    if dist.obs_noise_var > 0.0:
        clean += np.sqrt(dist.obs_noise_var) * rng.standard_normal(clean.shape)
    return clean


def residual_split(theta, mean) -> ResidualWeights:
    """Split weights into mean + residual, keeping the subtraction exact."""
    theta = np.asarray(theta, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if theta.shape != mean.shape:
        raise ValueError("theta and mean must have equal length")
    hi = theta - mean
    # error-free transform of the subtraction (Knuth two-sum with -mean):
    # theta - mean == hi + lo exactly, for any finite inputs
    b = -mean
    bv = hi - theta
    lo = (theta - (hi - bv)) + (b - bv)
    return ResidualWeights(mean, hi, lo)


def residual_combine(res: ResidualWeights):
    """Reconstruct the original weights from a residual split, bit-exact."""
    t = res.residual + res.mean_weights
    # two-sum error of the addition above, then fold in the stored
    # subtraction error; the final add rounds once, landing on theta
    bv = t - res.residual
    err = (res.residual - (t - bv)) + (res.mean_weights - bv)
    return t + (err + res.residual_lo)
