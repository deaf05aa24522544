"""Shared utility functions for the entanglekit package."""

import math
import operator
from concurrent.futures import ThreadPoolExecutor

from .errors import ArgumentError


def is_power_of_two(n):
    try:
        n = operator.index(n)
    except TypeError:
        return False
    return n >= 1 and (n & (n - 1)) == 0


def log2_exact(n):
    """Return L with n == 2**L, or raise ArgumentError."""
    n = int(n)
    if not is_power_of_two(n):
        raise ArgumentError(f"{n} is not a power of two")
    return n.bit_length() - 1


def next_power_of_two(n):
    if n < 1:
        raise ArgumentError(f"need at least one feature, got {n}")
    return 1 << (n - 1).bit_length()


def integer_root(value, power):
    """Exact integer power-th root of value, or raise ArgumentError."""
    root = round(value ** (1.0 / power))
    for candidate in (root - 1, root, root + 1):
        if candidate >= 1 and candidate ** power == value:
            return candidate
    raise ArgumentError(f"{value} is not a perfect {power}-th power")


def binary_entropy(x):
    """H_b(x) = -x ln x - (1-x) ln(1-x), with H_b(0) = H_b(1) = 0."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


def parallel_map(fn, items, workers=1):
    """Map fn over items, in a thread pool when workers > 1.

    Results come back in input order, so output never depends on scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
