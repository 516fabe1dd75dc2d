# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scalar integrator for the built-in coefficient family.

Drift and diffusion are

    mu(x, y)    = a*x + a0*y - k*x**alpha
    sigma(x, y) = b*x + b0*y

evaluated in exactly this operation order; ``sepca._fallback`` mirrors it
so both backends produce bit-identical trajectories.
"""
import numpy as np

from libc.math cimport fabs, isfinite, pow


def simulate_polylin(double x0, const double[::1] dB, Py_ssize_t m,
                     double k, double alpha, double a, double a0,
                     double b, double b0, bint tamed):
    """Integrate one scalar path; returns ``(values, diverged_at)``.

    ``values`` holds y_0..y_N (truncated before the first non-finite
    value), ``diverged_at`` is that step index or -1.
    """
    cdef Py_ssize_t N = dB.shape[0]
    cdef Py_ssize_t n
    cdef double h = 1.0 / m
    cdef double x, yd, mu, sig, nxt
    out = np.empty(N + 1, dtype=np.float64)
    cdef double[::1] y = out
    y[0] = x0
    for n in range(N):
        x = y[n]
        yd = y[(n // m) * m]
        mu = a * x + a0 * yd
        if k != 0.0:
            mu = mu - k * pow(x, alpha)
        sig = b * x + b0 * yd
        if tamed:
            nxt = x + (mu * h) / (1.0 + h * fabs(mu)) + sig * dB[n]
        else:
            nxt = x + mu * h + sig * dB[n]
        if not isfinite(nxt):
            return out[:n + 1], n + 1
        y[n + 1] = nxt
    return out, -1
