"""Finite-field arithmetic, universally decodable matrices, PAM branch codes.

Field elements are plain ints in 0..q-1 encoding polynomial coefficients over
GF(p) in base p (so for GF(4) with modulus X^2+X+1: 2 is X, 3 is X+1, and
2*2 = 3).  A `GaloisField` instance carries dense add/mul/inv tables.

A set of L square n x n matrices over GF(q) is universally decodable when
every stack of the first k_l rows of each matrix with sum k_l >= n has full
rank n; checking the tuples with sum exactly n suffices, since extra rows
never reduce rank.  The construction used here evaluates Hasse derivatives:
matrix 0 reads coefficients in reverse order (the point at infinity), matrix
1 is the identity (evaluation at 0), and matrix l >= 2 at a distinct nonzero
point beta has entries binom(j, k) beta^(j-k) with binomials reduced mod the
field characteristic.  Validity requires L <= q + 1; correctness is certified
by `udm_verify`, not assumed.

Each branch maps its GF(q)^n output vector to one q^n-ary PAM symbol: entry i
(i = 0-based, least significant) contributes digit q^i, and the PAM value is
2 * index - (q^n - 1).  The I and Q rails carry independent information
vectors, so a length-L block holds 2n field symbols.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import comb

import numpy as np

# irreducible modulus per prime power, as polynomial coefficient ints base p
_IRREDUCIBLE = {
    4: 0b111,  # X^2 + X + 1
    8: 0b1011,  # X^3 + X + 1
    16: 0b10011,  # X^4 + X + 1
    9: 1 * 9 + 0 * 3 + 1,  # X^2 + 1 over GF(3)
    27: 1 * 27 + 0 * 9 + 2 * 3 + 1,  # X^3 + 2X + 1 over GF(3)
    25: 1 * 25 + 1 * 5 + 1,  # X^2 + X + 1 over GF(5)
}


def _factor_prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            m = q
            while m % p == 0:
                m //= p
                e += 1
            if m != 1:
                raise ValueError(f"q={q} is not a prime power")
            for d in range(2, p):
                if p % d == 0:
                    raise ValueError(f"q={q} is not a prime power")
            return p, e
    raise ValueError("q must be >= 2")


def _poly_of(v: int, p: int) -> list[int]:
    out = []
    while v:
        out.append(v % p)
        v //= p
    return out


def _int_of(poly, p: int) -> int:
    v = 0
    for c in reversed(poly):
        v = v * p + c
    return v


class GaloisField:
    """GF(p^e) with table-based arithmetic on int-encoded elements."""

    def __init__(self, q: int):
        p, e = _factor_prime_power(q)
        if e > 1 and q not in _IRREDUCIBLE:
            raise ValueError(f"no modulus table entry for q={q}")
        self.q = q
        self.p = p
        self.e = e
        mod = _poly_of(_IRREDUCIBLE[q], p) if e > 1 else [0, 1]
        add = np.zeros((q, q), np.int64)
        mul = np.zeros((q, q), np.int64)
        for a in range(q):
            pa = _poly_of(a, p)
            for b in range(q):
                pb = _poly_of(b, p)
                s = [0] * max(len(pa), len(pb), 1)
                for i, c in enumerate(pa):
                    s[i] = (s[i] + c) % p
                for i, c in enumerate(pb):
                    s[i] = (s[i] + c) % p
                add[a, b] = _int_of(s, p)
                prod = [0] * (len(pa) + len(pb) + 1)
                for i, ca in enumerate(pa):
                    for j, cb in enumerate(pb):
                        prod[i + j] = (prod[i + j] + ca * cb) % p
                # reduce mod the field modulus
                for i in range(len(prod) - 1, e - 1, -1):
                    c = prod[i]
                    if c:
                        prod[i] = 0
                        for j, mc in enumerate(mod[:-1]):
                            # X^e = -mod[:-1] since mod is monic
                            prod[i - e + j] = (prod[i - e + j] - c * mc) % p
                mul[a, b] = _int_of(prod, p)
        inv = np.zeros(q, np.int64)
        for a in range(1, q):
            hit = np.where(mul[a] == 1)[0]
            if hit.size != 1:
                raise AssertionError("field table construction failed")
            inv[a] = hit[0]
        self.add_table = add
        self.mul_table = mul
        self.inv_table = inv

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        # characteristic-p negation: find c with b + c = 0
        neg = int(np.where(self.add_table[b] == 0)[0][0])
        return int(self.add_table[a, neg])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return int(self.inv_table[a])

    def pow(self, a: int, k: int) -> int:
        out = 1
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def matvec(self, A: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.zeros(A.shape[0], np.int64)
        for i in range(A.shape[0]):
            acc = 0
            for j in range(A.shape[1]):
                acc = self.add(acc, self.mul(int(A[i, j]), int(v[j])))
            out[i] = acc
        return out


@lru_cache(maxsize=None)
def get_field(q: int) -> GaloisField:
    return GaloisField(q)


def gf_rank(rows: np.ndarray, field: GaloisField) -> int:
    """Rank over GF(q) by Gaussian elimination with table arithmetic."""
    a = np.array(rows, dtype=np.int64)
    if a.size == 0:
        return 0
    nr, nc = a.shape
    rank = 0
    col = 0
    while rank < nr and col < nc:
        piv = -1
        for r in range(rank, nr):
            if a[r, col]:
                piv = r
                break
        if piv < 0:
            col += 1
            continue
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        ipiv = field.inv(int(a[rank, col]))
        for c in range(col, nc):
            a[rank, c] = field.mul(int(a[rank, c]), ipiv)
        for r in range(nr):
            if r != rank and a[r, col]:
                f = int(a[r, col])
                for c in range(col, nc):
                    a[r, c] = field.sub(int(a[r, c]), field.mul(f, int(a[rank, c])))
        rank += 1
        col += 1
    return rank


@dataclass(frozen=True)
class UdmSet:
    L: int
    n: int
    q: int
    matrices: tuple  # L int arrays of shape (n, n)

    @property
    def field(self) -> GaloisField:
        return get_field(self.q)


def build_udm(L: int, n: int, q: int) -> UdmSet:
    """Hasse-derivative construction; valid for L <= q + 1."""
    if L < 1 or n < 1:
        raise ValueError("L and n must be >= 1")
    field = get_field(q)
    if L > q + 1:
        raise ValueError(f"construction requires L <= q+1 (got L={L}, q={q})")
    mats = []
    for ell in range(L):
        A = np.zeros((n, n), np.int64)
        if ell == 0:
            for k in range(n):
                A[k, n - 1 - k] = 1
        elif ell == 1:
            for k in range(n):
                A[k, k] = 1
        else:
            beta = ell - 1  # distinct nonzero elements 1, 2, ... in int encoding
            for k in range(n):
                for j in range(k, n):
                    cb = comb(j, k) % field.p
                    A[k, j] = field.mul(cb, field.pow(beta, j - k))
        mats.append(A)
    return UdmSet(L=L, n=n, q=q, matrices=tuple(mats))


def _tuples_summing_to(total: int, parts: int, cap: int):
    if parts == 1:
        if 0 <= total <= cap:
            yield (total,)
        return
    for head in range(min(cap, total) + 1):
        for rest in _tuples_summing_to(total - head, parts - 1, cap):
            yield (head,) + rest


def udm_verify(udm: UdmSet) -> bool:
    """Exhaustive rank certification over all tuples with sum k_l = n."""
    field = udm.field
    for ks in _tuples_summing_to(udm.n, udm.L, udm.n):
        rows = [udm.matrices[i][: ks[i]] for i in range(udm.L) if ks[i]]
        stack = np.concatenate(rows, axis=0)
        if gf_rank(stack, field) < udm.n:
            return False
    return True


def udm_text(udm: UdmSet) -> str:
    """Integer grids for audit, blank line between matrices."""
    blocks = []
    for A in udm.matrices:
        blocks.append("\n".join(" ".join(str(int(v)) for v in row) for row in A))
    return "\n\n".join(blocks) + "\n"


def pam_value(v: np.ndarray, q: int) -> int:
    """GF vector to odd PAM level: 2 * (base-q index) - (q^n - 1)."""
    idx = 0
    for i in range(len(v) - 1, -1, -1):
        idx = idx * q + int(v[i])
    return 2 * idx - (q ** len(v) - 1)


def encode_permutation(
    u_i: np.ndarray, u_q: np.ndarray, udm: UdmSet, energy: float
) -> np.ndarray:
    """Length-L complex block; branch l carries A_l u on each rail."""
    if u_i.shape[0] != udm.n or u_q.shape[0] != udm.n:
        raise ValueError("information vectors must have length n")
    field = udm.field
    qn = udm.q**udm.n
    scale = np.sqrt(3.0 * energy / (2.0 * (qn**2 - 1)))
    out = np.empty(udm.L, np.complex128)
    for ell in range(udm.L):
        vi = field.matvec(udm.matrices[ell], u_i)
        vq = field.matvec(udm.matrices[ell], u_q)
        out[ell] = scale * complex(pam_value(vi, udm.q), pam_value(vq, udm.q))
    return out


@dataclass(frozen=True)
class UdmCodebook:
    """All messages of the I/Q permutation code, enumerated for exhaustive ML."""

    L: int
    n: int
    q: int
    energy: float

    @property
    def num_messages(self) -> int:
        return self.q ** (2 * self.n)

    @property
    def rate_bpcu(self) -> float:
        return 2.0 * self.n * np.log2(self.q) / self.L

    def encode(self, message: int) -> np.ndarray:
        qn = self.q**self.n
        if not 0 <= message < qn * qn:
            raise ValueError("message index out of range")
        udm = _cached_udm(self.L, self.n, self.q)
        idx_i = message % qn
        idx_q = message // qn
        u_i = _digits(idx_i, self.q, self.n)
        u_q = _digits(idx_q, self.q, self.n)
        return encode_permutation(u_i, u_q, udm, self.energy)

    @property
    def points(self) -> np.ndarray:
        return _udm_points(self.L, self.n, self.q, self.energy)


def _digits(index: int, base: int, ndigits: int) -> np.ndarray:
    out = np.empty(ndigits, np.int64)
    for i in range(ndigits):
        out[i] = index % base
        index //= base
    return out


@lru_cache(maxsize=8)
def _cached_udm(L: int, n: int, q: int) -> UdmSet:
    return build_udm(L, n, q)


@lru_cache(maxsize=4)
def _udm_points(L: int, n: int, q: int, energy: float) -> np.ndarray:
    nc = q ** (2 * n)
    if nc > 1 << 20:
        raise ValueError("codebook too large to enumerate")
    cb = UdmCodebook(L=L, n=n, q=q, energy=energy)
    pts = np.empty((nc, L), np.complex128)
    for w in range(nc):
        pts[w] = cb.encode(w)
    return pts
