"""Deterministic series generators shared across test modules."""

import numpy as np


def logistic_map(n, x0=0.4):
    """Fully chaotic logistic map x -> 4x(1-x); exact exponent is ln 2."""
    x = np.empty(n)
    x[0] = x0
    for i in range(n - 1):
        x[i + 1] = 4.0 * x[i] * (1.0 - x[i])
    return x


def sine_wave(n, period=25.0):
    return np.sin(2.0 * np.pi * np.arange(n) / period)


def ar2_values(n=200, seed=2024, intercept=0.05, phi1=0.49, phi2=0.49,
               noise_sd=0.05, burn_in=100):
    """Stationary AR(2) draw with coefficients inside the model search box."""
    rng = np.random.default_rng(seed)
    x = np.zeros(n + burn_in)
    for t in range(2, n + burn_in):
        x[t] = intercept + phi1 * x[t - 1] + phi2 * x[t - 2] + rng.normal(0.0, noise_sd)
    return x[burn_in:]


def brute_force_fronts(objs):
    """O(n^2) non-dominated front peeling used as a sorting oracle."""
    objs = np.asarray(objs, dtype=float)
    n = objs.shape[0]
    remaining = set(range(n))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if i == j:
                    continue
                a, b = objs[j], objs[i]
                if a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1]):
                    dominated = True
                    break
            if not dominated:
                front.append(i)
        fronts.append(sorted(front))
        remaining -= set(front)
    return fronts
