"""Synthetic datasets with planted correlation structure.

block-pairs      features come in correlated groups of adjacent indices
grid-quadrants   2D grid whose aligned sub-squares share a latent factor
iid              independent standard normal features
"""

import logging

import numpy as np

from .data_tensor import Dataset
from .errors import ArgumentError
from .rearrange import FeaturePermutation, apply_permutation
from .utils import is_power_of_two, log2_exact

logger = logging.getLogger(__name__)

KINDS = ("block-pairs", "grid-quadrants", "iid")
LABEL_MODES = ("ones", "random", "none")


def _labels(rng, M, mode):
    if mode == "ones":
        return np.ones(M)
    if mode == "random":
        return rng.choice([-1.0, 1.0], size=M)
    if mode == "none":
        return None
    raise ArgumentError(f"unknown label mode {mode!r}; expected one of {LABEL_MODES}")


def _check_common(M, rho):
    if M < 1:
        raise ArgumentError(f"need at least one instance, got M={M}")
    if not -1.0 <= rho <= 1.0:
        raise ArgumentError(f"rho must lie in [-1, 1], got {rho}")


def _latent_mix(rng, latent, rho, shape):
    noise = rng.standard_normal(shape)
    return rho * latent + np.sqrt(1.0 - rho ** 2) * noise


def block_pairs(M, N, rho=0.9, D=1, group=2, seed=0, labels="ones", scale=1.0):
    """Features n and n + 1, ..., n + group - 1 (n a multiple of group) share a latent.

    Within a group, features correlate with coefficient rho^2 for D = 1.
    """
    _check_common(M, rho)
    if not is_power_of_two(group) or group < 2 or N % group:
        raise ArgumentError(f"group size {group} must be a power of two dividing N={N}")
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((M, N // group, 1, D))
    x = _latent_mix(rng, latent, rho, (M, N // group, group, D))
    ds = Dataset(features=scale * x.reshape(M, N, D), labels=_labels(rng, M, labels))
    ds.metadata.update(generator="block-pairs", rho=rho, group=group, seed=seed)
    return ds


def grid_quadrants(M, side=4, rho=0.9, D=1, block=2, seed=0, labels="ones", scale=1.0):
    """2D grid where each aligned block x block square shares a latent factor."""
    _check_common(M, rho)
    if not (is_power_of_two(side) and is_power_of_two(block)) or block > side or block < 2:
        raise ArgumentError(f"block {block} must be a power of two in [2, side={side}]")
    rng = np.random.default_rng(seed)
    nb = side // block
    latent = rng.standard_normal((M, nb, 1, nb, 1, D))
    x = _latent_mix(rng, latent, rho, (M, nb, block, nb, block, D))
    ds = Dataset(features=scale * x.reshape(M, side * side, D),
                 labels=_labels(rng, M, labels), dim=2)
    ds.metadata.update(generator="grid-quadrants", rho=rho, block=block, seed=seed)
    return ds


def iid(M, N, D=1, seed=0, labels="ones", dim=1):
    if M < 1:
        raise ArgumentError(f"need at least one instance, got M={M}")
    rng = np.random.default_rng(seed)
    ds = Dataset(features=rng.standard_normal((M, N, D)),
                 labels=_labels(rng, M, labels), dim=dim)
    ds.metadata.update(generator="iid", seed=seed)
    return ds


def generate(kind, M, N, rho=0.9, D=1, seed=0, labels="ones", scale=1.0):
    """Dispatch on kind; N is the feature count (side^2 for grid-quadrants)."""
    if kind == "block-pairs":
        return block_pairs(M, N, rho=rho, D=D, seed=seed, labels=labels, scale=scale)
    if kind == "grid-quadrants":
        side = int(round(N ** 0.5))
        if side * side != N:
            raise ArgumentError(f"grid-quadrants needs a square feature count, got {N}")
        return grid_quadrants(M, side=side, rho=rho, D=D, seed=seed, labels=labels,
                              scale=scale)
    if kind == "iid":
        return iid(M, N, D=D, seed=seed, labels=labels)
    raise ArgumentError(f"unknown generator {kind!r}; expected one of {KINDS}")


# ── Planted structure ─────────────────────────────────────────────────


def shuffle_features(ds, seed=0):
    """Apply a uniformly random permutation; returns (dataset, permutation)."""
    rng = np.random.default_rng(seed)
    perm = FeaturePermutation(ds.dim, ds.side, tuple(rng.permutation(ds.N).tolist()))
    return apply_permutation(ds, perm), perm


def planted_groups(ds):
    """Feature index groups of a generated dataset, in generation order."""
    kind = ds.metadata.get("generator")
    if kind == "block-pairs":
        g = ds.metadata["group"]
        return [tuple(range(s, s + g)) for s in range(0, ds.N, g)]
    if kind == "grid-quadrants":
        b, side = ds.metadata["block"], ds.side
        groups = []
        for bi in range(0, side, b):
            for bj in range(0, side, b):
                groups.append(tuple((bi + i) * side + bj + j
                                    for i in range(b) for j in range(b)))
        return groups
    raise ArgumentError(f"dataset from {kind!r} has no planted groups")


def group_recovery(groups, perm, shuffle=None):
    """Fraction of groups landing in one canonical block of their own size.

    shuffle is the permutation applied before rearrangement, if any.
    """
    side, dim = perm.side, perm.dim
    shape = (side,) * dim
    recovered = 0
    for group in groups:
        block_cells = len(group)
        block_side = round(block_cells ** (1.0 / dim))
        log2_exact(block_side)
        targets = [perm.mapping[shuffle.mapping[i] if shuffle else i] for i in group]
        coords = np.array(np.unravel_index(targets, shape)).T // block_side
        if np.all(coords == coords[0]):
            recovered += 1
    return recovered / len(groups)
