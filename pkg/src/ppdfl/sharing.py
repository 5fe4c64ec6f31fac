"""Shamir secret sharing over GF(p) with interpolation-weighted shares.

A secret s is split by sampling a random polynomial H with H(0) = s and
handing holder j the evaluation H(j); holder ids double as evaluation
points, so they must be distinct, nonzero and below the modulus. Any
tau+1 holders recover s by Lagrange interpolation at zero. Pre-multiplying
each share by its interpolation weight

    delta(C, j) = prod_{k in C, k != j}  k / (k - j)   (mod p)

turns reconstruction over the full holder set into a plain modular sum,
which is what lets sums of shares travel through an averaging layer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .field import FieldElement, PrimeModulus, _inverse_int


class NotMember(ValueError):
    """The named id is not part of the holder set."""


class BadDegree(ValueError):
    """Polynomial degree incompatible with the holder set size."""


class KeySetMismatch(ValueError):
    """Share map keys do not match the holder set."""


class TooFewShares(ValueError):
    """Fewer shares supplied than the declared degree requires."""


@dataclass(frozen=True)
class ShareholderSet:
    """Ordered set of distinct positive holder ids (evaluation points)."""

    ids: tuple[int, ...]

    def __post_init__(self):
        ids = tuple(sorted(int(i) for i in self.ids))
        if not ids:
            raise ValueError("holder set must be nonempty")
        if ids[0] <= 0:
            raise ValueError("holder ids must be positive")
        if len(set(ids)) != len(ids):
            raise ValueError("holder ids must be distinct")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, i: int) -> bool:
        return i in self.ids

    def __iter__(self):
        return iter(self.ids)


@dataclass(frozen=True)
class RawShare:
    """One polynomial evaluation H(holder_id)."""

    holder_id: int
    value: FieldElement


@dataclass(frozen=True)
class WeightedShare:
    """A raw share pre-multiplied by its interpolation weight."""

    holder_id: int
    value: FieldElement


def _check_ids_in_field(ids: Iterable[int], p: int) -> None:
    top = max(ids)
    if top >= p:
        raise ValueError(f"holder id {top} is not a valid point mod {p}")


def _delta_int(ids: tuple[int, ...], member: int, p: int) -> int:
    d = 1
    for j in ids:
        if j != member:
            d = d * j % p
            d = d * _inverse_int((j - member) % p, p) % p
    return d


def lagrange_delta(
    holders: ShareholderSet, member: int, modulus: PrimeModulus
) -> FieldElement:
    """Interpolation-at-zero weight for one holder; 1 for a singleton set."""
    if member not in holders:
        raise NotMember(f"id {member} not in holder set {holders.ids}")
    _check_ids_in_field(holders.ids, modulus.p)
    return FieldElement(_delta_int(holders.ids, member, modulus.p), modulus)


def interpolation_weights(
    holders: ShareholderSet, modulus: PrimeModulus
) -> dict[int, FieldElement]:
    """All interpolation weights of a holder set, keyed by holder id."""
    _check_ids_in_field(holders.ids, modulus.p)
    p = modulus.p
    return {
        j: FieldElement(_delta_int(holders.ids, j, p), modulus) for j in holders.ids
    }


def _poly_eval(constant: int, coeffs: list[int], x: int, p: int) -> int:
    # Horner on c_tau x^tau + ... + c_1 x + constant
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return (acc * x + constant) % p


def _generate_share_values(
    secret: int, tau: int, ids: tuple[int, ...], p: int, rng: random.Random
) -> dict[int, int]:
    """Core of share generation on plain residues; see generate_shares."""
    coeffs = [rng.randrange(p) for _ in range(tau)]
    return {j: _poly_eval(secret % p, coeffs, j, p) for j in ids}


def generate_shares(
    secret: FieldElement,
    tau: int,
    holders: ShareholderSet,
    rng: random.Random,
) -> dict[int, RawShare]:
    """Split secret with a fresh random polynomial of degree at most tau.

    All tau coefficients are drawn uniformly from [0, p). Uniform
    coefficients are what make any tau shares carry zero information
    about the secret; restricting the top coefficient away from zero
    would skew the share distribution by an s-dependent exclusion.
    Deterministic given the rng state.
    """
    if tau < 0:
        raise BadDegree("degree must be non-negative")
    if len(holders) == 1:
        if tau != 0:
            raise BadDegree("a single holder admits only degree 0")
    elif not 1 <= tau < len(holders):
        raise BadDegree(
            f"degree {tau} invalid for {len(holders)} holders; need 1 <= tau < |C|"
        )
    p = secret.modulus.p
    _check_ids_in_field(holders.ids, p)
    values = _generate_share_values(secret.value, tau, holders.ids, p, rng)
    return {
        j: RawShare(j, FieldElement(v, secret.modulus)) for j, v in values.items()
    }


def weight_shares(
    raw: Mapping[int, RawShare], holders: ShareholderSet
) -> dict[int, WeightedShare]:
    """Multiply each raw share by its interpolation weight."""
    if set(raw.keys()) != set(holders.ids):
        raise KeySetMismatch(
            f"share keys {sorted(raw)} do not match holder set {holders.ids}"
        )
    modulus = next(iter(raw.values())).value.modulus
    weights = interpolation_weights(holders, modulus)
    return {
        j: WeightedShare(j, raw[j].value * weights[j]) for j in holders.ids
    }


def reconstruct(
    shares: Mapping[int, RawShare] | Iterable[RawShare],
    tau: int,
    modulus: PrimeModulus,
) -> FieldElement:
    """Recover the secret from raw shares of a degree-tau polynomial.

    Interpolation weights are taken over the ids actually supplied, so any
    subset of at least tau+1 holders works.
    """
    if isinstance(shares, Mapping):
        share_list = list(shares.values())
    else:
        share_list = list(shares)
    ids = tuple(sorted(s.holder_id for s in share_list))
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate holder ids in reconstruction set")
    if len(ids) < tau + 1:
        raise TooFewShares(
            f"{len(ids)} shares cannot determine a degree-{tau} polynomial"
        )
    p = modulus.p
    _check_ids_in_field(ids, p)
    total = 0
    for s in share_list:
        total = (total + s.value.value * _delta_int(ids, s.holder_id, p)) % p
    return FieldElement(total, modulus)
