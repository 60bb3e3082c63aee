"""Small statistical utilities shared by the verification suites and tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


def chisq_gof(observed: dict, probs: dict, min_expected: float = 5.0) -> tuple:
    """Chi-square goodness of fit with automatic pooling of thin cells.

    ``observed`` maps outcome -> count, ``probs`` maps outcome -> probability
    (outcomes missing from ``observed`` count zero).  Cells with expected
    count below ``min_expected`` are pooled into one.  Returns (stat, dof, p).
    """
    total = sum(observed.values())
    cells = []
    pooled_obs = 0.0
    pooled_exp = 0.0
    for outcome, p in probs.items():
        exp = p * total
        obs = observed.get(outcome, 0)
        if exp < min_expected:
            pooled_obs += obs
            pooled_exp += exp
        else:
            cells.append((obs, exp))
    if pooled_exp > 0:
        cells.append((pooled_obs, pooled_exp))
    leftover = sum(observed.values()) - sum(o for o, _ in cells)
    if leftover:
        raise ValueError("observed outcomes outside the support of probs")
    stat = sum((o - e) ** 2 / e for o, e in cells)
    dof = len(cells) - 1
    if dof <= 0:
        return 0.0, 0, 1.0
    return stat, dof, float(sps.chi2.sf(stat, dof))


def chisq_homogeneity(table: np.ndarray) -> tuple:
    """Chi-square independence test on a contingency table (rows x cols)."""
    table = np.asarray(table, dtype=np.float64)
    keep = table.sum(axis=0) > 0
    table = table[:, keep]
    row = table.sum(axis=1, keepdims=True)
    col = table.sum(axis=0, keepdims=True)
    expected = row * col / table.sum()
    mask = expected > 0
    stat = float(((table - expected) ** 2 / np.where(mask, expected, 1))[mask].sum())
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    if dof <= 0:
        return 0.0, 0, 1.0
    return stat, dof, float(sps.chi2.sf(stat, dof))


def variance_with_se(values: np.ndarray) -> tuple:
    """Unbiased sample variance and its standard error via the fourth moment."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        raise ValueError("need at least two values")
    mean = values.mean()
    dev = values - mean
    s2 = float(dev.dot(dev) / (n - 1))
    m4 = float((dev**4).mean())
    var_of_var = (m4 - (n - 3) / (n - 1) * s2 * s2) / n
    return s2, math.sqrt(max(var_of_var, 0.0))


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_se: float


def least_squares_line(x: np.ndarray, y: np.ndarray) -> LineFit:
    """OLS fit y = a x + b with the standard error of the slope."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("need at least three points for a slope standard error")
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - slope * x - intercept
    sigma2 = float(resid.dot(resid) / (len(x) - 2))
    return LineFit(slope=slope, intercept=intercept, slope_se=math.sqrt(sigma2 / sxx))
