import os
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

THREADS_ENV = "RKHS_DAGMA_THREADS"


def n_threads(threads=None):
    """
     Number of worker threads for per-node fan-out. An explicit value wins, then the
     RKHS_DAGMA_THREADS environment variable; 0 or unset means os.cpu_count().
    """
    if threads is None:
        value = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(value)
        except ValueError:
            raise DataError("{} must be an integer. Received: '{}'.".format(THREADS_ENV, value))
    if threads < 0:
        raise DataError("The number of threads cannot be negative. Received: {}.".format(threads))
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def parallel_map(func, items, threads=None):
    """
     Map func over items, concurrently when more than one thread is allowed. The order
     of the results always follows the order of items.
    """
    items = list(items)
    threads = min(n_threads(threads), len(items)) if items else 1
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def check_finite_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("{} must be a 2D matrix. Received an array with shape {}.".format(name, X.shape))
    if not np.all(np.isfinite(X)):
        rows = np.where(~np.all(np.isfinite(X), axis=1))[0]
        raise DataError("{} contains non-finite values.".format(name), row=int(rows[0]) + 1)
    return X


def standardize(X):
    """
     Center every column and scale it to unit variance.
    :return: (Z, mean, scale) with X == Z * scale + mean.
    """
    X = check_finite_matrix(X)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    degenerate = np.where(scale <= 1e-12 * np.maximum(1.0, np.abs(mean)))[0]
    if len(degenerate):
        raise DataError("Column(s) {} have zero variance and cannot be standardized."
                        .format((degenerate + 1).tolist()))
    return (X - mean) / scale, mean, scale
