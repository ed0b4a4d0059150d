"""Active-space Hamiltonian ingestion: FCIDUMP parsing, symmetry-compressed
two-electron integral storage, and the pivoted Cholesky factorization of the
repulsion tensor used by the auxiliary-field propagator."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FcidumpError",
    "IntegralSet",
    "CholeskyFactors",
    "parse_fcidump",
    "load_fcidump",
    "write_fcidump",
    "get_eri",
    "cholesky_factorize",
]

DEFAULT_CHOLESKY_THRESHOLD = 1e-6


class FcidumpError(ValueError):
    """Malformed FCIDUMP content; message carries the offending line number."""


def _pair_index(p: int, q: int) -> int:
    # p >= q assumed
    return p * (p + 1) // 2 + q


def canonical_eri_index(p: int, q: int, r: int, s: int) -> int:
    """Compressed storage slot of (pq|rs) under full 8-fold symmetry."""
    ij = _pair_index(max(p, q), min(p, q))
    kl = _pair_index(max(r, s), min(r, s))
    if ij < kl:
        ij, kl = kl, ij
    return ij * (ij + 1) // 2 + kl


@dataclass
class IntegralSet:
    """Core energy plus one- and two-electron integrals of an active space.

    The two-electron tensor is in chemists' notation (pq|rs) and is stored
    compressed over its 8 index permutations.  Instances are immutable after
    construction and safe to share between threads.
    """

    n_orbitals: int
    n_alpha: int
    n_beta: int
    core_energy: float
    h1: np.ndarray
    eri_compressed: np.ndarray
    _eri_dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_orbitals
        self.h1 = np.asarray(self.h1, dtype=float)
        if self.h1.shape != (n, n):
            raise ValueError(f"h1 must be {n}x{n}, got {self.h1.shape}")
        if not np.allclose(self.h1, self.h1.T, atol=1e-12):
            raise ValueError("h1 must be symmetric")
        npair = n * (n + 1) // 2
        expected = npair * (npair + 1) // 2
        self.eri_compressed = np.asarray(self.eri_compressed, dtype=float)
        if self.eri_compressed.shape != (expected,):
            raise ValueError(
                f"compressed eri must have {expected} entries, got {self.eri_compressed.shape}"
            )
        if not (0 <= self.n_alpha <= n and 0 <= self.n_beta <= n):
            raise ValueError("electron counts must lie in [0, n_orbitals]")
        self.h1.setflags(write=False)
        self.eri_compressed.setflags(write=False)

    @classmethod
    def empty(cls, n_orbitals: int, n_alpha: int, n_beta: int, core_energy: float = 0.0):
        npair = n_orbitals * (n_orbitals + 1) // 2
        return cls(
            n_orbitals=n_orbitals,
            n_alpha=n_alpha,
            n_beta=n_beta,
            core_energy=core_energy,
            h1=np.zeros((n_orbitals, n_orbitals)),
            eri_compressed=np.zeros(npair * (npair + 1) // 2),
        )

    @classmethod
    def from_arrays(cls, h1, eri, core_energy, n_alpha, n_beta):
        """Build from a dense (pq|rs) tensor, compressing by symmetry."""
        h1 = np.asarray(h1, dtype=float)
        eri = np.asarray(eri, dtype=float)
        n = h1.shape[0]
        inst = cls.empty(n, n_alpha, n_beta, core_energy)
        h = inst.h1.copy()
        h.setflags(write=True)
        h[:] = h1
        packed = inst.eri_compressed.copy()
        packed.setflags(write=True)
        for p in range(n):
            for q in range(p + 1):
                for r in range(p + 1):
                    for s in range(r + 1):
                        if _pair_index(p, q) >= _pair_index(r, s):
                            packed[canonical_eri_index(p, q, r, s)] = eri[p, q, r, s]
        return cls(n, n_alpha, n_beta, float(core_energy), h, packed)

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    def get_eri(self, p: int, q: int, r: int, s: int) -> float:
        """(pq|rs), resolving all 8 permutations from compressed storage."""
        n = self.n_orbitals
        for idx in (p, q, r, s):
            if not 0 <= idx < n:
                raise ValueError(f"orbital index {idx} out of range [0, {n})")
        return float(self.eri_compressed[canonical_eri_index(p, q, r, s)])

    def eri_dense(self) -> np.ndarray:
        """Dense (n,n,n,n) view of the repulsion tensor (cached)."""
        if self._eri_dense is None:
            n = self.n_orbitals
            dense = np.zeros((n, n, n, n))
            for p in range(n):
                for q in range(p + 1):
                    for r in range(p + 1):
                        for s in range(r + 1):
                            if _pair_index(p, q) < _pair_index(r, s):
                                continue
                            v = self.eri_compressed[canonical_eri_index(p, q, r, s)]
                            dense[p, q, r, s] = dense[q, p, r, s] = v
                            dense[p, q, s, r] = dense[q, p, s, r] = v
                            dense[r, s, p, q] = dense[s, r, p, q] = v
                            dense[r, s, q, p] = dense[s, r, q, p] = v
            dense.setflags(write=False)
            object.__setattr__(self, "_eri_dense", dense)
        return self._eri_dense


def get_eri(integrals: IntegralSet, p: int, q: int, r: int, s: int) -> float:
    """Module-level alias for :meth:`IntegralSet.get_eri`."""
    return integrals.get_eri(p, q, r, s)


_HEADER_KEY_RE = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=(?:,\s*[A-Za-z0-9_]+\s*=)|$)")


def parse_fcidump(source) -> IntegralSet:
    """Parse FCIDUMP text into a fully symmetrized :class:`IntegralSet`.

    ``source`` may be a string, an open text file, or an iterable of lines.
    Indices are 1-based on disk and converted to 0-based here; unspecified
    integrals default to zero.  ORBSYM/ISYM labels are accepted and ignored.
    """
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source

    header_parts: list[str] = []
    in_header = False
    header_done = False
    norb = nelec = ms2 = None
    data: list[tuple[int, float, int, int, int, int]] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_done:
            upper = line.upper()
            if not in_header:
                if not upper.startswith("&FCI"):
                    raise FcidumpError(f"line {lineno}: expected '&FCI' namelist header")
                in_header = True
                line = line[4:]
                upper = upper[4:]
            end = None
            for token in ("&END", "$END", "/"):
                pos = upper.find(token)
                if pos >= 0:
                    end = pos
                    break
            if end is not None:
                header_parts.append(line[:end])
                header_done = True
            else:
                header_parts.append(line)
            if header_done:
                keys = {}
                for m in _HEADER_KEY_RE.finditer(" ".join(header_parts)):
                    keys[m.group(1).upper()] = m.group(2).strip().rstrip(",")
                try:
                    norb = int(keys["NORB"])
                    nelec = int(keys["NELEC"])
                    ms2 = int(keys.get("MS2", "0"))
                except KeyError as exc:
                    raise FcidumpError(f"header is missing {exc.args[0]}") from None
                except ValueError:
                    raise FcidumpError("header NORB/NELEC/MS2 must be integers") from None
                if norb <= 0:
                    raise FcidumpError(f"header NORB={norb} must be positive")
                if (nelec + ms2) % 2 or abs(ms2) > nelec:
                    raise FcidumpError(f"inconsistent NELEC={nelec}, MS2={ms2}")
            continue
        tokens = line.split()
        if len(tokens) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value p q r s', got {line!r}")
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(t) for t in tokens[1:])
        except ValueError:
            raise FcidumpError(f"line {lineno}: non-numeric field in {line!r}") from None
        for idx in (p, q, r, s):
            if idx < 0 or idx > norb:
                raise FcidumpError(f"line {lineno}: index {idx} out of range [0, {norb}]")
        data.append((lineno, value, p, q, r, s))

    if not header_done:
        raise FcidumpError("missing or unterminated '&FCI' header")

    n_alpha = (nelec + ms2) // 2
    n_beta = (nelec - ms2) // 2
    inst = IntegralSet.empty(norb, n_alpha, n_beta)
    h1 = inst.h1.copy()
    h1.setflags(write=True)
    packed = inst.eri_compressed.copy()
    packed.setflags(write=True)
    core = 0.0

    for lineno, value, p, q, r, s in data:
        if p == q == r == s == 0:
            core = value
        elif r == 0 and s == 0:
            if q == 0:
                continue  # orbital-energy record; not part of the Hamiltonian
            if p == 0:
                raise FcidumpError(f"line {lineno}: invalid index pattern 0 {q} 0 0")
            h1[p - 1, q - 1] = value
            h1[q - 1, p - 1] = value
        else:
            if 0 in (p, q, r, s):
                raise FcidumpError(
                    f"line {lineno}: mixed zero/nonzero indices {p} {q} {r} {s}"
                )
            packed[canonical_eri_index(p - 1, q - 1, r - 1, s - 1)] = value

    return IntegralSet(norb, n_alpha, n_beta, core, h1, packed)


def load_fcidump(path) -> IntegralSet:
    with open(path) as handle:
        return parse_fcidump(handle)


def write_fcidump(integrals: IntegralSet, destination, tol: float = 0.0) -> None:
    """Write FCIDUMP text that re-parses to an identical IntegralSet."""
    own = isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__")
    out = open(destination, "w") if own else destination
    try:
        n = integrals.n_orbitals
        ms2 = integrals.n_alpha - integrals.n_beta
        out.write(f" &FCI NORB={n:4d},NELEC={integrals.n_electrons:3d},MS2={ms2:d},\n")
        out.write("  ORBSYM=" + "1," * n + "\n")
        out.write("  ISYM=1,\n")
        out.write(" &END\n")
        for p in range(n):
            for q in range(p + 1):
                for r in range(p + 1):
                    smax = q if r == p else r
                    for s in range(smax + 1):
                        v = integrals.get_eri(p, q, r, s)
                        if abs(v) > tol:
                            out.write(f"{v:23.16E} {p+1:4d} {q+1:4d} {r+1:4d} {s+1:4d}\n")
        for p in range(n):
            for q in range(p + 1):
                if abs(integrals.h1[p, q]) > tol:
                    out.write(f"{integrals.h1[p, q]:23.16E} {p+1:4d} {q+1:4d}    0    0\n")
        out.write(f"{integrals.core_energy:23.16E}    0    0    0    0\n")
    finally:
        if own:
            out.close()


@dataclass(frozen=True)
class CholeskyFactors:
    """Symmetric factors L^g with (pq|rs) ~= sum_g L^g_pq L^g_rs."""

    vectors: np.ndarray  # (n_vectors, n, n)
    threshold: float

    @property
    def n_vectors(self) -> int:
        return self.vectors.shape[0]

    def reconstruction_error(self, integrals: IntegralSet) -> float:
        dense = integrals.eri_dense()
        approx = np.einsum("gpq,grs->pqrs", self.vectors, self.vectors)
        return float(np.max(np.abs(dense - approx)))


def cholesky_factorize(
    integrals: IntegralSet, threshold: float = DEFAULT_CHOLESKY_THRESHOLD
) -> CholeskyFactors:
    """Pivoted incomplete Cholesky of the (pq|rs) tensor viewed as an
    n^2 x n^2 matrix; stops when the residual diagonal is below ``threshold``.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    n = integrals.n_orbitals
    mat = integrals.eri_dense().reshape(n * n, n * n)
    diag = np.diagonal(mat).copy()
    vectors: list[np.ndarray] = []
    neg_tol = 10.0 * threshold
    while len(vectors) < n * n:
        pivot = int(np.argmax(diag))
        dmax = diag[pivot]
        if dmax <= threshold:
            break
        column = mat[:, pivot].copy()
        for vec in vectors:
            column -= vec * vec[pivot]
        vectors.append(column / np.sqrt(dmax))
        diag = diag - vectors[-1] ** 2
    if diag.size and float(np.min(diag)) < -neg_tol:
        raise ValueError(
            "two-electron tensor is not positive semidefinite: "
            f"residual diagonal pivot {float(np.min(diag)):.6e}"
        )
    stacked = (
        np.array(vectors).reshape(len(vectors), n, n)
        if vectors
        else np.zeros((0, n, n))
    )
    # Columns of the n^2 x n^2 matrix are symmetric n x n matrices, and the
    # factors inherit that; enforce exactly to guard against roundoff.
    stacked = 0.5 * (stacked + stacked.transpose(0, 2, 1))
    return CholeskyFactors(vectors=stacked, threshold=threshold)
