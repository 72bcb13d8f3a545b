"""Joint-space evaluation metrics."""

from dataclasses import dataclass

import numpy as np

from mprim.basis import PhiMatrix
from mprim.regressor import loss_trajectory


@dataclass(frozen=True)
class EvalRecord:
    """One metrics row: a sample group with its error averages."""

    group: str
    ave_mse: float      # rad^2
    ave_ed_mm: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("a metrics row needs at least one sample")
        if self.ave_mse < 0 or self.ave_ed_mm < 0:
            raise ValueError("metrics must be nonnegative")


def squared_trajectory_loss(pred_weights, gt_weights, phi: PhiMatrix) -> float:
    """One sample's squared trajectory loss, summed over joints."""
    return sum(
        loss_trajectory(pred_weights.per_joint[j], gt_weights.per_joint[j],
                        phi) ** 2
        for j in range(gt_weights.n_joint))


def ave_mse(pred_weights_list, gt_weights_list, phi: PhiMatrix) -> float:
    """Mean over samples of the squared trajectory loss.

    Per sample the per-joint squared losses are summed, then the samples
    are averaged.
    """
    if len(pred_weights_list) != len(gt_weights_list):
        raise ValueError("prediction and ground-truth lists differ in length")
    if len(pred_weights_list) == 0:
        raise ValueError("need at least one sample")
    per_sample = [squared_trajectory_loss(p, g, phi)
                  for p, g in zip(pred_weights_list, gt_weights_list)]
    return float(np.mean(per_sample))
