"""Mean squared error, the only loss either autoencoder needs."""

import numpy as np


def mse_loss(prediction, target):
    """Mean of squared elementwise differences and its gradient.

    Returns (loss, grad) where grad is d(loss)/d(prediction), shaped
    like the prediction.
    """
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    diff = prediction - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad
