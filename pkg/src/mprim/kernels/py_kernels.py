"""Pure-numpy implementations of the hot numerical kernels.

This is the reference backend; `mprim.kernels._ckernels` implements the
same four functions in Cython. Both operate on contiguous float64 arrays
and must stay interchangeable (see tests/test_kernels.py).
"""

import numpy as np

NAME = "python"


def basis_matrix(z, centers, width):
    """Normalized Gaussian basis activations, one row per phase value.

    Rows are b_i(z)/sum_j b_j(z) with b_i(z) = exp(-(z - c_i)^2 / (2*width)).
    Rows where every unnormalized activation underflows come back as
    non-finite; the caller is responsible for rejecting those.
    """
    z = np.asarray(z, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    diff = z[:, None] - centers[None, :]
    raw = np.exp(-(diff * diff) / (2.0 * width))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = raw / raw.sum(axis=1)[:, None]
    return out


def mlp_forward_acts(x, weights, biases):
    """Forward pass of a dense net: tanh on hidden layers, identity output.

    Returns the list of layer activations, starting with the input batch
    and ending with the network output. The intermediate activations are
    what the backward pass needs.
    """
    acts = [np.ascontiguousarray(x, dtype=np.float64)]
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(z if k == last else np.tanh(z))
    return acts


def mlp_backward_acts(acts, weights, delta_out):
    """Backpropagate an output gradient through the activations.

    `acts` is the list produced by mlp_forward_acts. Returns per-layer
    weight and bias gradients, input-to-output order.
    """
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = np.ascontiguousarray(delta_out, dtype=np.float64)
    for k in range(len(weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            # tanh'(z) expressed through the stored activation
            delta = (delta @ weights[k].T) * (1.0 - acts[k] * acts[k])
    return grads_w, grads_b


def dmp_rollout(start, goal, forcing_weights, centers, widths, tau,
                alpha_z, beta_z, alpha_x, dt, steps):
    """Explicit-Euler integration of the goal-attractor dynamics.

    State per joint: position q and scaled velocity v, with
    tau*dq = v and tau*dv = alpha_z*(beta_z*(g - q) - v) + f(x).
    The forcing term f is the kernel-weighted mix scaled by the phase x
    and the start-to-goal span. Returns positions, shape (steps, n_joint),
    row 0 being the start configuration.
    """
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    w = np.asarray(forcing_weights, dtype=np.float64)
    span = goal - start
    out = np.empty((steps, start.shape[0]))
    q = start.copy()
    v = np.zeros_like(q)
    out[0] = q
    for s in range(1, steps):
        x = np.exp(-alpha_x * ((s - 1) * dt) / tau)
        psi = np.exp(-widths * (x - centers) ** 2)
        f = (w @ psi) / psi.sum() * x * span
        v_dot = (alpha_z * (beta_z * (goal - q) - v) + f) / tau
        q = q + dt * (v / tau)
        v = v + dt * v_dot
        out[s] = q
    return out
