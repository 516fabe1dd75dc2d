"""Pure-Python twin of ``sepca._kernels``, used when the extension is absent."""

import math

import numpy as np


def simulate_polylin(x0, dB, m, k, alpha, a, a0, b, b0, tamed):
    N = len(dB)
    h = 1.0 / m
    incs = dB.tolist()
    y = [0.0] * (N + 1)
    y[0] = x = float(x0)
    isfinite = math.isfinite
    for n in range(N):
        yd = y[(n // m) * m]
        mu = a * x + a0 * yd
        if k != 0.0:
            try:
                mu = mu - k * x**alpha
            except OverflowError:
                return np.array(y[: n + 1]), n + 1
        sig = b * x + b0 * yd
        if tamed:
            x = x + (mu * h) / (1.0 + h * abs(mu)) + sig * incs[n]
        else:
            x = x + mu * h + sig * incs[n]
        if not isfinite(x):
            return np.array(y[: n + 1]), n + 1
        y[n + 1] = x
    return np.array(y), -1
