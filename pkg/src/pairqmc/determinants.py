"""Bitstring Slater determinants: seniority, excitation degree, textual
notation, excitation generators, and Slater-Condon matrix elements.

A spin string is a plain Python int whose bit k marks spatial orbital k as
occupied in that spin channel (ints are unbounded, so any orbital count is
representable).  Creation operators are ordered alpha block before beta
block, ascending orbital index within each block; all fermionic phases below
follow from that single convention.  Display order puts orbital 0 leftmost.
"""

from __future__ import annotations

import itertools
from typing import Iterator, NamedTuple

from .integrals import IntegralSet

__all__ = [
    "SpinString",
    "PairString",
    "Determinant",
    "seniority",
    "expand_pair",
    "excitation_degree",
    "slater_condon",
    "hartree_fock_determinant",
    "connected_determinants",
    "occupied_orbitals",
    "format_spin_string",
    "parse_spin_string",
    "format_determinant",
    "parse_determinant",
]

SpinString = int  # occupation mask for one spin channel
PairString = int  # occupation mask of doubly occupied spatial orbitals


class Determinant(NamedTuple):
    """A Slater determinant as an (alpha, beta) pair of spin strings.

    Tuple ordering gives the canonical (alpha, beta) sort used everywhere a
    determinant list needs a reproducible order.
    """

    alpha: SpinString
    beta: SpinString


def occupied_orbitals(bits: int) -> list[int]:
    """Indices of set bits, ascending."""
    occ = []
    while bits:
        low = bits & -bits
        occ.append(low.bit_length() - 1)
        bits ^= low
    return occ


def seniority(det: Determinant) -> int:
    """Number of singly occupied spatial orbitals."""
    return (det.alpha ^ det.beta).bit_count()


def expand_pair(pair: PairString) -> Determinant:
    """Closed-shell determinant with both spin channels equal to ``pair``."""
    return Determinant(pair, pair)


def _require_same_sector(a: Determinant, b: Determinant) -> None:
    if a.alpha.bit_count() != b.alpha.bit_count() or a.beta.bit_count() != b.beta.bit_count():
        raise ValueError(
            "determinants live in different particle-number sectors: "
            f"({a.alpha.bit_count()},{a.beta.bit_count()}) vs "
            f"({b.alpha.bit_count()},{b.beta.bit_count()})"
        )


def excitation_degree(a: Determinant, b: Determinant) -> int:
    """Number of spin orbitals in which ``a`` and ``b`` differ, halved."""
    _require_same_sector(a, b)
    return ((a.alpha ^ b.alpha).bit_count() + (a.beta ^ b.beta).bit_count()) // 2


def _single_phase(string: int, hole: int, particle: int) -> int:
    """Parity of moving one electron hole -> particle within one channel.

    Counts occupied orbitals strictly between the two indices; the count is
    the same on either determinant of the pair.
    """
    lo, hi = (hole, particle) if hole < particle else (particle, hole)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return -1 if (string & mask).bit_count() & 1 else 1


def _single_excitation_element(ints, h1, eri, hole, particle, same_occ, other_occ):
    value = h1[hole, particle]
    for n in same_occ:
        value += eri[hole, particle, n, n] - eri[hole, n, n, particle]
    for n in other_occ:
        value += eri[hole, particle, n, n]
    return value


def slater_condon(a: Determinant, b: Determinant, integrals: IntegralSet) -> float:
    """Hamiltonian matrix element <a|H|b> including the fermionic phase.

    Zero beyond excitation degree 2; the diagonal includes the core energy.
    """
    _require_same_sector(a, b)
    diff_a = a.alpha ^ b.alpha
    diff_b = a.beta ^ b.beta
    na, nb = diff_a.bit_count(), diff_b.bit_count()
    if na + nb > 4:
        return 0.0

    h1 = integrals.h1
    eri = integrals.eri_dense()

    if na + nb == 0:
        occ_a = occupied_orbitals(a.alpha)
        occ_b = occupied_orbitals(a.beta)
        value = integrals.core_energy
        for i in occ_a:
            value += h1[i, i]
        for i in occ_b:
            value += h1[i, i]
        for occ in (occ_a, occ_b):
            for i in occ:
                for j in occ:
                    value += 0.5 * (eri[i, i, j, j] - eri[i, j, i, j])
        for i in occ_a:
            for j in occ_b:
                value += eri[i, i, j, j]
        return float(value)

    if na + nb == 2:
        # Single excitation confined to one spin channel.
        if na == 2:
            (hole,) = occupied_orbitals(diff_a & a.alpha)
            (particle,) = occupied_orbitals(diff_a & b.alpha)
            phase = _single_phase(b.alpha, hole, particle)
            same_occ = occupied_orbitals(a.alpha & b.alpha)
            other_occ = occupied_orbitals(a.beta)
        else:
            (hole,) = occupied_orbitals(diff_b & a.beta)
            (particle,) = occupied_orbitals(diff_b & b.beta)
            phase = _single_phase(b.beta, hole, particle)
            same_occ = occupied_orbitals(a.beta & b.beta)
            other_occ = occupied_orbitals(a.alpha)
        value = _single_excitation_element(
            integrals, h1, eri, hole, particle, same_occ, other_occ
        )
        return float(phase * value)

    if na == 2 and nb == 2:
        # Opposite-spin double; phases factorize per channel.
        (ha,) = occupied_orbitals(diff_a & a.alpha)
        (pa,) = occupied_orbitals(diff_a & b.alpha)
        (hb,) = occupied_orbitals(diff_b & a.beta)
        (pb,) = occupied_orbitals(diff_b & b.beta)
        phase = _single_phase(b.alpha, ha, pa) * _single_phase(b.beta, hb, pb)
        return float(phase * eri[ha, pa, hb, pb])

    # Same-spin double: apply the two singles sequentially so the phase of
    # the second one is evaluated on the intermediate string.
    if na == 4:
        source, target = a.alpha, b.alpha
    else:
        source, target = a.beta, b.beta
    h1_, h2_ = occupied_orbitals((source ^ target) & source)
    p1_, p2_ = occupied_orbitals((source ^ target) & target)
    phase = _single_phase(target, h1_, p1_)
    intermediate = (target & ~(1 << p1_)) | (1 << h1_)
    phase *= _single_phase(intermediate, h2_, p2_)
    return float(phase * (eri[h1_, p1_, h2_, p2_] - eri[h1_, p2_, h2_, p1_]))


def hartree_fock_determinant(n_alpha: int, n_beta: int) -> Determinant:
    """Aufbau determinant: the lowest orbitals occupied in each channel."""
    return Determinant((1 << n_alpha) - 1, (1 << n_beta) - 1)


def _single_excitations(bits: int, n_orbitals: int) -> Iterator[int]:
    occ = occupied_orbitals(bits)
    vir = [p for p in range(n_orbitals) if not (bits >> p) & 1]
    for h in occ:
        for p in vir:
            yield (bits & ~(1 << h)) | (1 << p)


def _double_excitations(bits: int, n_orbitals: int) -> Iterator[int]:
    occ = occupied_orbitals(bits)
    vir = [p for p in range(n_orbitals) if not (bits >> p) & 1]
    for h1, h2 in itertools.combinations(occ, 2):
        removed = bits & ~(1 << h1) & ~(1 << h2)
        for p1, p2 in itertools.combinations(vir, 2):
            yield removed | (1 << p1) | (1 << p2)


def connected_determinants(det: Determinant, n_orbitals: int) -> Iterator[Determinant]:
    """All determinants related to ``det`` by a single or double excitation
    within its particle-number sector."""
    alpha_singles = list(_single_excitations(det.alpha, n_orbitals))
    beta_singles = list(_single_excitations(det.beta, n_orbitals))
    for sa in alpha_singles:
        yield Determinant(sa, det.beta)
    for sb in beta_singles:
        yield Determinant(det.alpha, sb)
    for da in _double_excitations(det.alpha, n_orbitals):
        yield Determinant(da, det.beta)
    for db in _double_excitations(det.beta, n_orbitals):
        yield Determinant(det.alpha, db)
    for sa in alpha_singles:
        for sb in beta_singles:
            yield Determinant(sa, sb)


def format_spin_string(bits: int, n_orbitals: int) -> str:
    """Render with orbital 0 leftmost, e.g. 0b011 with N=3 -> '110'."""
    return "".join("1" if (bits >> k) & 1 else "0" for k in range(n_orbitals))


def parse_spin_string(text: str) -> int:
    bits = 0
    for k, char in enumerate(text):
        if char == "1":
            bits |= 1 << k
        elif char != "0":
            raise ValueError(f"invalid occupation character {char!r} in {text!r}")
    return bits


def format_determinant(det: Determinant, n_orbitals: int) -> str:
    return f"{format_spin_string(det.alpha, n_orbitals)}|{format_spin_string(det.beta, n_orbitals)}"


def parse_determinant(text: str) -> Determinant:
    try:
        alpha, beta = text.strip().split("|")
    except ValueError:
        raise ValueError(f"determinant text must look like 'abits|bbits': {text!r}") from None
    return Determinant(parse_spin_string(alpha), parse_spin_string(beta))
