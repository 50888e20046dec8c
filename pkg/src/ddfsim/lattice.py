"""Rotated-QAM lattice codebooks and mod-lattice coset encoding.

The complex generator G of size n = M*T is

    G[j, k] = n^(-1/2) * exp(i pi (4j + 1) k / (2n)),

a unitary rotation of Z[i]^n whose integer points have non-vanishing product
distance (full diversity).  Two codebooks share it:

* `QamCodebook`: x = scale * G b with b drawn from odd-integer Q^2-QAM per
  complex dimension, Q^(2n) messages, rate 2 log2 Q bits per symbol.
* `CosetCodebook`: the mod-lattice scheme.  Over the real expansion (2x2
  rotation blocks, so the expanded generator is orthogonal), the codeword
  lattice is L = scale * Gr Z^(2n), the shaping sublattice is Q L, and the
  transmit point is x = [c - u] mod QL with c = scale * Gr z,
  z in {0..Q-1}^(2n) and u a dither uniform over the Voronoi region.

Messages are indexed by base-Q digit vectors over the 2n real dimensions,
digit i sitting at weight Q^i, dimensions interleaved (Re0, Im0, Re1, ...).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

SPHERE_CAP_DEFAULT = 10_000_000


def build_rotation(n: int) -> np.ndarray:
    """Unitary n x n complex rotation generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return np.exp(1j * np.pi * (4 * j + 1) * k / (2 * n)) / np.sqrt(n)


def generator_text(G: np.ndarray) -> str:
    """Row-major text dump, 17 significant digits, 're im' per entry."""
    lines = []
    for row in np.atleast_2d(G):
        parts = []
        for v in row:
            vc = complex(v)
            parts.append(f"{vc.real:.17g} {vc.imag:.17g}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def complex_to_real_matrix(Gc: np.ndarray) -> np.ndarray:
    """Real expansion with interleaved re/im coordinates.

    Entry a+ib becomes the 2x2 block [[a, -b], [b, a]]; a unitary complex
    matrix expands to a real orthogonal one.
    """
    n, m = Gc.shape
    out = np.empty((2 * n, 2 * m))
    out[0::2, 0::2] = Gc.real
    out[0::2, 1::2] = -Gc.imag
    out[1::2, 0::2] = Gc.imag
    out[1::2, 1::2] = Gc.real
    return out


def complex_to_real_vector(x: np.ndarray) -> np.ndarray:
    out = np.empty(2 * x.shape[0])
    out[0::2] = x.real
    out[1::2] = x.imag
    return out


def real_to_complex_vector(x: np.ndarray) -> np.ndarray:
    return x[0::2] + 1j * x[1::2]


def digits_of(index: int, base: int, ndigits: int) -> np.ndarray:
    """Base-`base` digits of index, least significant first."""
    if not 0 <= index < base**ndigits:
        raise ValueError("message index out of range")
    out = np.empty(ndigits, np.int64)
    for i in range(ndigits):
        out[i] = index % base
        index //= base
    return out


def index_of(digits: np.ndarray, base: int) -> int:
    idx = 0
    for d in digits[::-1]:
        idx = idx * base + int(d)
    return idx


def mod_lattice(y: np.ndarray, gen: np.ndarray, cap: int = SPHERE_CAP_DEFAULT) -> np.ndarray:
    """y reduced to the fundamental Voronoi region of the lattice gen Z^n.

    Exact: subtracts the closest lattice point found by sphere search.
    """
    q, r = np.linalg.qr(gen)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    r = sign[:, None] * r
    q = q * sign[None, :]
    zq = q.T @ y
    n = gen.shape[1]
    dummy = np.zeros(n, np.int64)
    z, _, _, status = kernels.se_closest(
        np.ascontiguousarray(r), np.ascontiguousarray(zq), dummy, dummy, False, cap
    )
    if not status:
        raise RuntimeError("mod_lattice: sphere search exceeded its node cap")
    return y - gen @ z


@dataclass(frozen=True)
class QamCodebook:
    """Rotated QAM: x(w) = scale * G b(w), b odd-integer QAM digits."""

    Q: int
    n: int
    energy: float

    def __post_init__(self):
        if self.Q < 2:
            raise ValueError("Q must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def num_messages(self) -> int:
        return self.Q ** (2 * self.n)

    @property
    def rate_bpcu(self) -> float:
        return 2.0 * np.log2(self.Q)

    @property
    def scale(self) -> float:
        # E[|b|^2] per complex symbol is 2(Q^2-1)/3 for odd-integer QAM
        return float(np.sqrt(3.0 * self.energy / (2.0 * (self.Q**2 - 1))))

    @cached_property
    def generator(self) -> np.ndarray:
        return build_rotation(self.n)

    def info_vector(self, message: int) -> np.ndarray:
        """Complex QAM vector b with odd-integer re/im parts."""
        t = digits_of(message, self.Q, 2 * self.n)
        b = 2 * t - (self.Q - 1)
        return b[0::2] + 1j * b[1::2]

    def encode(self, message: int) -> np.ndarray:
        return self.scale * (self.generator @ self.info_vector(message))

    @cached_property
    def points(self) -> np.ndarray:
        """All codewords, shape (Q^(2n), n).  Exhaustive-ML decoders index this."""
        nc = self.num_messages
        if nc > 1 << 20:
            raise ValueError("codebook too large to enumerate")
        t = np.empty((nc, 2 * self.n), np.int64)
        idx = np.arange(nc)
        for i in range(2 * self.n):
            t[:, i] = idx % self.Q
            idx = idx // self.Q
        b = 2 * t - (self.Q - 1)
        bc = b[:, 0::2] + 1j * b[:, 1::2]
        return self.scale * (bc @ self.generator.T)


@dataclass(frozen=True)
class CosetCodebook:
    """Mod-lattice scheme over the real expansion of the rotation generator."""

    Q: int
    n: int
    energy: float

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def num_messages(self) -> int:
        return self.Q ** (2 * self.n)

    @property
    def rate_bpcu(self) -> float:
        return 2.0 * np.log2(self.Q)

    @property
    def scale(self) -> float:
        # uniform over the Voronoi region of QL (a rotated cube of side
        # Q*scale) has per-complex-symbol energy (Q*scale)^2 / 6
        return float(np.sqrt(6.0 * self.energy) / self.Q)

    @cached_property
    def generator(self) -> np.ndarray:
        return build_rotation(self.n)

    @cached_property
    def real_generator(self) -> np.ndarray:
        """Codeword lattice basis over R^(2n), scale included."""
        return self.scale * complex_to_real_matrix(self.generator)

    @cached_property
    def shaping_generator(self) -> np.ndarray:
        return self.Q * self.real_generator

    def digits(self, message: int) -> np.ndarray:
        return digits_of(message, self.Q, 2 * self.n)

    def message_of_digits(self, digits: np.ndarray) -> int:
        return index_of(np.mod(digits, self.Q), self.Q)

    def coset_representative(self, message: int) -> np.ndarray:
        """c = Gr z before dithering, a real vector of length 2n."""
        return self.real_generator @ self.digits(message).astype(float)

    def draw_dither(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform over the Voronoi region of the shaping lattice.

        A uniform draw over the fundamental parallelepiped is carried into
        the Voronoi region by mod_lattice; the mod map is volume-preserving
        between fundamental regions, so uniformity is exact.
        """
        t = rng.random(2 * self.n)
        w = self.shaping_generator @ t
        return mod_lattice(w, self.shaping_generator)

    def encode(self, message: int, dither: np.ndarray) -> np.ndarray:
        """Transmit point [c - u] mod QL, returned as MT complex symbols."""
        x = mod_lattice(self.coset_representative(message) - dither, self.shaping_generator)
        return real_to_complex_vector(x)
