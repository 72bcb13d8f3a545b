"""Discrete dynamic movement primitives (goal-attractor baseline).

One second-order spring-damper per joint, driven by a phase-gated forcing
term. The phase x decays exponentially in time, the forcing term is a
normalized mix of Gaussian kernels in x scaled by x*(g - q0), so the
system always settles on the goal once the phase has died out.
"""

from dataclasses import dataclass

import numpy as np

from mprim import kernels
from mprim.basis import PhaseConfig
from mprim.errors import IntegrationError
from mprim.promp import Trajectory

DEFAULT_ALPHA_Z = 25.0
DEFAULT_BETA_Z = DEFAULT_ALPHA_Z / 4.0   # critical damping
DEFAULT_ALPHA_X = DEFAULT_ALPHA_Z / 3.0
# sharpening factor on the 1/spacing^2 kernel widths; 4 reproduces a
# 150-sample minimum-jerk demo to ~5e-3 rad RMSE with 25 kernels
KERNEL_WIDTH_SCALE = 4.0
ROLLOUT_OVERSAMPLE = 10


@dataclass(frozen=True)
class DmpModel:
    """Fitted parameters of a multi-joint DMP."""

    forcing_weights: np.ndarray   # (n_joint, n_basis)
    goal: np.ndarray              # (n_joint,) rad
    start: np.ndarray             # (n_joint,) rad
    tau: float
    alpha_z: float = DEFAULT_ALPHA_Z
    beta_z: float = DEFAULT_BETA_Z
    alpha_x: float = DEFAULT_ALPHA_X
    kernel_centers: np.ndarray = None
    kernel_widths: np.ndarray = None
    degenerate_joints: tuple = ()   # joints with g == q0, forcing zeroed

    def __post_init__(self):
        for name in ("tau", "alpha_z", "beta_z", "alpha_x"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.kernel_centers is None or self.kernel_widths is None:
            centers, widths = forcing_kernels(
                self.forcing_weights.shape[1], self.alpha_x)
            object.__setattr__(self, "kernel_centers", centers)
            object.__setattr__(self, "kernel_widths", widths)

    @property
    def n_joint(self):
        return self.forcing_weights.shape[0]

    @property
    def n_basis(self):
        return self.forcing_weights.shape[1]


def canonical(t, model: DmpModel) -> float:
    """Phase x(t) = exp(-alpha_x * t / tau); starts at 1, decays to 0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return float(np.exp(-model.alpha_x * t / model.tau))


def forcing_kernels(n_basis, alpha_x=DEFAULT_ALPHA_X,
                    width_scale=KERNEL_WIDTH_SCALE):
    """Kernel centers/widths in phase space, evenly spaced in time.

    Centers follow the exponential phase at equal time steps over one
    nominal duration; widths scale with the inverse squared spacing so
    neighbouring kernels keep a constant overlap.
    """
    if n_basis < 1:
        raise ValueError("n_basis must be >= 1")
    centers = np.exp(-alpha_x * np.linspace(0.0, 1.0, n_basis))
    widths = np.empty(n_basis)
    if n_basis > 1:
        widths[:-1] = width_scale / np.diff(centers) ** 2
        widths[-1] = widths[-2]
    else:
        widths[0] = width_scale
    return centers, widths


def fit_dmp(traj: Trajectory, n_basis: int, tau: float,
            alpha_z=DEFAULT_ALPHA_Z, beta_z=DEFAULT_BETA_Z,
            alpha_x=DEFAULT_ALPHA_X) -> DmpModel:
    """Fit forcing weights to a demo by locally weighted regression.

    The demo is mapped onto the nominal duration tau, velocities and
    accelerations come from central finite differences (one-sided at the
    ends), and each kernel is regressed independently against the target
    forcing term. A joint whose demo starts on its goal has no
    start-to-goal span to scale the forcing term; its weights are set to
    zero and the joint index is recorded on the model.
    """
    q = traj.values
    T = q.shape[0]
    if T < 3:
        raise ValueError("need at least 3 samples to differentiate the demo")
    dt = tau / (T - 1)
    qd = np.gradient(q, dt, axis=0, edge_order=2)
    qdd = np.gradient(qd, dt, axis=0, edge_order=2)
    start, goal = q[0].copy(), q[-1].copy()

    x = np.exp(-alpha_x * np.arange(T) * dt / tau)
    centers, widths = forcing_kernels(n_basis, alpha_x)
    psi = np.exp(-widths[None, :] * (x[:, None] - centers[None, :]) ** 2)

    # f_target = tau^2 qdd - alpha_z (beta_z (g - q) - tau qd), per joint
    f_target = tau ** 2 * qdd - alpha_z * (beta_z * (goal - q) - tau * qd)

    weights = np.zeros((q.shape[1], n_basis))
    degenerate = []
    for j in range(q.shape[1]):
        span = goal[j] - start[j]
        if span == 0.0:
            degenerate.append(j)
            continue
        xi = x * span
        num = psi.T @ (xi * f_target[:, j])
        den = psi.T @ (xi * xi)
        weights[j] = np.where(den > 1e-300, num / np.where(den > 0, den, 1.0),
                              0.0)
    return DmpModel(weights, goal, start, tau, alpha_z, beta_z, alpha_x,
                    centers, widths, tuple(degenerate))


def rollout(model: DmpModel, dt: float, steps: int) -> Trajectory:
    """Integrate the attractor dynamics with explicit Euler.

    Returns `steps` position samples at times 0, dt, ..., (steps-1)*dt,
    the first one being the start configuration.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    track = kernels.dmp_rollout(
        model.start, model.goal, model.forcing_weights,
        model.kernel_centers, model.kernel_widths, model.tau,
        model.alpha_z, model.beta_z, model.alpha_x, dt, steps)
    if not np.all(np.isfinite(track)):
        raise IntegrationError(
            "rollout diverged to a non-finite state; reduce dt")
    return Trajectory(track, PhaseConfig(1.0 / dt, steps))


def rollout_matched(model: DmpModel, n_samples: int,
                    oversample: int = ROLLOUT_OVERSAMPLE) -> Trajectory:
    """Rollout resampled onto the n_samples grid a demo of that length uses.

    Integrates at `oversample` sub-steps per demo sample over one nominal
    duration tau and keeps every oversample-th point, so sample k lands
    exactly at time k*tau/(n_samples-1).
    """
    dt = model.tau / ((n_samples - 1) * oversample)
    full = rollout(model, dt, (n_samples - 1) * oversample + 1)
    values = full.values[::oversample]
    fs = (n_samples - 1) / model.tau
    return Trajectory(np.ascontiguousarray(values), PhaseConfig(fs, n_samples))
