"""Domain model: hypotheses, classes, samples, finite distributions, losses.

Domain points are the integers ``0 .. N-1``. Constructions that are stated
over ``[N] = {1, ..., N}`` (thresholds, the median distribution) use the
1-indexed position ``i + 1`` for stored point ``i``.

A :class:`Sample` is a multiset, stored as a ``(N, 2)`` array of counts
indexed by ``(point, label)``. That is exactly the canonical sorted order of
its examples, so every learner here is invariant under reordering a sample.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Iterator
from functools import cached_property, lru_cache, total_ordering
from pathlib import Path
from typing import NamedTuple

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
PROB_TOL = 1e-9


class DomainError(ValueError):
    """Objects over different domains were combined."""


# -- seeds -------------------------------------------------------------------


def _mix64(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@lru_cache(maxsize=None)
def _label_code(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def derive_seed(master: int, label: str, i: int = 0) -> int:
    """Stateless 64-bit seed for item ``i`` of the loop called ``label``."""
    base = _mix64((int(master) & MASK64) ^ _label_code(label))
    return _mix64((base + (int(i) & MASK64) * _GOLDEN) & MASK64)


def derive_seeds(master: int, label: str, count: int) -> np.ndarray:
    """Vectorised ``derive_seed`` for ``i = 0 .. count-1`` (uint64 array)."""
    base = np.uint64(_mix64((int(master) & MASK64) ^ _label_code(label)))
    idx = np.arange(count, dtype=np.uint64)
    return _mix64_array(base + idx * np.uint64(_GOLDEN))


def numpy_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


# -- hypotheses and classes -------------------------------------------------


@total_ordering
class Hypothesis:
    """Total labelling of ``{0..N-1}``; bit ``i`` of ``bits`` labels point ``i``.

    Ordering and serialisation use the 0/1 string whose ``i``-th character is
    the label of point ``i``.
    """

    __slots__ = ("domain_size", "bits", "__dict__")

    def __init__(self, domain_size: int, bits: int):
        if domain_size < 1:
            raise ValueError("domain size must be positive")
        if not 0 <= bits < (1 << domain_size):
            raise ValueError(f"bits {bits} do not fit a domain of size {domain_size}")
        self.domain_size = int(domain_size)
        self.bits = int(bits)

    @classmethod
    def from_string(cls, s: str) -> Hypothesis:
        s = s.strip()
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a 0/1 string: {s!r}")
        return cls(len(s), int(s[::-1], 2))

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> Hypothesis:
        return cls.from_string("".join("1" if b else "0" for b in labels))

    @classmethod
    def constant(cls, domain_size: int, label: int) -> Hypothesis:
        return cls(domain_size, (1 << domain_size) - 1 if label else 0)

    @cached_property
    def string(self) -> str:
        return format(self.bits, f"0{self.domain_size}b")[::-1]

    @cached_property
    def labels(self) -> np.ndarray:
        arr = np.frombuffer(self.string.encode(), dtype=np.uint8) - ord("0")
        arr.flags.writeable = False
        return arr

    def __call__(self, x: int) -> int:
        return (self.bits >> x) & 1

    def flipped(self) -> Hypothesis:
        return Hypothesis(self.domain_size, self.bits ^ ((1 << self.domain_size) - 1))

    def __str__(self) -> str:
        return self.string

    def __repr__(self) -> str:
        return f"Hypothesis({self.string!r})"

    def __eq__(self, other):
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return self.domain_size == other.domain_size and self.bits == other.bits

    def __lt__(self, other):
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return self.string < other.string

    def __hash__(self):
        return hash((self.domain_size, self.bits))


class HypothesisClass:
    """Distinct hypotheses over one domain, kept in canonical order."""

    def __init__(self, domain_size: int, members: Iterable[Hypothesis]):
        members = list(members)
        for h in members:
            if h.domain_size != domain_size:
                raise DomainError(f"member {h} is not over a domain of size {domain_size}")
        if len(set(members)) != len(members):
            raise ValueError("class members must be distinct")
        self.domain_size = int(domain_size)
        self.members: tuple[Hypothesis, ...] = tuple(sorted(members))
        self._index = {h: i for i, h in enumerate(self.members)}

    @classmethod
    def from_strings(cls, strings: Iterable[str], domain_size: int | None = None) -> HypothesisClass:
        hs = [Hypothesis.from_string(s) for s in strings]
        if domain_size is None:
            if not hs:
                raise ValueError("domain size required for an empty class")
            domain_size = hs[0].domain_size
        return cls(domain_size, hs)

    def __len__(self):
        return len(self.members)

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __contains__(self, h):
        return h in self._index

    def __eq__(self, other):
        if not isinstance(other, HypothesisClass):
            return NotImplemented
        return self.domain_size == other.domain_size and self.members == other.members

    def __hash__(self):
        return hash((self.domain_size, self.members))

    def __repr__(self):
        return f"HypothesisClass(N={self.domain_size}, size={len(self)})"

    def index(self, h: Hypothesis) -> int:
        return self._index[h]

    def require_nonempty(self):
        if not self.members:
            raise ValueError("hypothesis class is empty")

    @cached_property
    def matrix(self) -> np.ndarray:
        """``(|H|, N)`` int64 label matrix."""
        if not self.members:
            return np.zeros((0, self.domain_size), dtype=np.int64)
        return np.stack([h.labels for h in self.members]).astype(np.int64)

    @cached_property
    def columns(self) -> list[int]:
        """Per point, the bitmask of member indices labelling it 1."""
        cols = [0] * self.domain_size
        for j, h in enumerate(self.members):
            for x in range(self.domain_size):
                if h(x):
                    cols[x] |= 1 << j
        return cols

    def mistakes(self, counts: np.ndarray) -> np.ndarray:
        """Mistake counts of every member on count arrays of shape ``(..., N, 2)``."""
        counts = np.asarray(counts, dtype=np.int64)
        m = self.matrix
        return counts[..., 0] @ m.T + counts[..., 1] @ (1 - m).T

    def subclass(self, predicate) -> HypothesisClass:
        return HypothesisClass(self.domain_size, [h for h in self.members if predicate(h)])

    def to_text(self) -> str:
        return "\n".join([str(self.domain_size)] + [h.string for h in self.members]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> HypothesisClass:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty class file")
        n = int(lines[0])
        hs = [Hypothesis.from_string(s) for s in lines[1:]]
        return cls(n, hs)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> HypothesisClass:
        return cls.from_text(Path(path).read_text())


# -- examples, samples, distributions ---------------------------------------


class Example(NamedTuple):
    point: int
    label: int


class Sample:
    """Multiset of examples stored as ``counts[point, label]``."""

    __slots__ = ("domain_size", "counts")

    def __init__(self, domain_size: int, counts):
        counts = np.array(counts, dtype=np.int64)
        if counts.shape != (domain_size, 2):
            raise DomainError(f"counts must have shape ({domain_size}, 2), got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("negative example count")
        counts.flags.writeable = False
        self.domain_size = int(domain_size)
        self.counts = counts

    @classmethod
    def from_examples(cls, domain_size: int, examples: Iterable) -> Sample:
        counts = np.zeros((domain_size, 2), dtype=np.int64)
        for x, y in examples:
            if not 0 <= x < domain_size or y not in (0, 1):
                raise DomainError(f"invalid example ({x}, {y}) for domain size {domain_size}")
            counts[x, y] += 1
        return cls(domain_size, counts)

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    def __len__(self):
        return self.size

    def examples(self) -> Iterator[Example]:
        """Examples in canonical order: by point, then label."""
        for x in range(self.domain_size):
            for y in (0, 1):
                for _ in range(int(self.counts[x, y])):
                    yield Example(x, y)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return self.domain_size == other.domain_size and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.domain_size, self.counts.tobytes()))

    def __repr__(self):
        return f"Sample(N={self.domain_size}, size={self.size})"


class FiniteDistribution:
    """Probability table over ``(point, label)`` pairs."""

    def __init__(self, domain_size: int, atoms: Iterable):
        table: dict[tuple[int, int], float] = {}
        for ex, p in atoms:
            x, y = int(ex[0]), int(ex[1])
            if not 0 <= x < domain_size or y not in (0, 1):
                raise DomainError(f"invalid atom ({x}, {y}) for domain size {domain_size}")
            if (x, y) in table:
                raise ValueError(f"duplicate atom ({x}, {y})")
            p = float(p)
            if not p >= 0.0:
                raise ValueError(f"negative probability for atom ({x}, {y})")
            table[(x, y)] = p
        if not table:
            raise ValueError("distribution needs at least one atom")
        total = math.fsum(table.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        keys = sorted(table)
        self.domain_size = int(domain_size)
        self.atoms: tuple[tuple[Example, float], ...] = tuple((Example(*k), table[k]) for k in keys)
        self.points = np.array([k[0] for k in keys], dtype=np.int64)
        self.labels = np.array([k[1] for k in keys], dtype=np.int64)
        self.probs = np.array([table[k] for k in keys], dtype=np.float64)

    @classmethod
    def uniform(cls, domain_size: int, examples: Iterable) -> FiniteDistribution:
        exs = list(dict.fromkeys((int(x), int(y)) for x, y in examples))
        return cls(domain_size, [(e, 1.0 / len(exs)) for e in exs])

    @classmethod
    def point_mass(cls, domain_size: int, point: int, label: int) -> FiniteDistribution:
        return cls(domain_size, [((point, label), 1.0)])

    @classmethod
    def realizable_uniform(cls, h: Hypothesis) -> FiniteDistribution:
        """Uniform over the domain, labelled by ``h``."""
        return cls.uniform(h.domain_size, [(x, h(x)) for x in range(h.domain_size)])

    @cached_property
    def table(self) -> np.ndarray:
        t = np.zeros((self.domain_size, 2), dtype=np.float64)
        t[self.points, self.labels] = self.probs
        return t

    def prob(self, point: int, label: int) -> float:
        return float(self.table[point, label])

    def __len__(self):
        return len(self.atoms)

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.domain_size == other.domain_size and self.atoms == other.atoms

    def __repr__(self):
        body = ", ".join(f"({e.point},{e.label}): {p:.6g}" for e, p in self.atoms)
        return f"FiniteDistribution(N={self.domain_size}, {{{body}}})"

    def to_text(self) -> str:
        lines = [f"# domain_size {self.domain_size}"]
        lines += [f"{e.point} {e.label} {p!r}" for e, p in self.atoms]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, domain_size: int | None = None) -> FiniteDistribution:
        atoms = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "domain_size" and domain_size is None:
                    domain_size = int(parts[1])
                continue
            x, y, p = line.split()
            atoms.append(((int(x), int(y)), float(p)))
        if domain_size is None:
            domain_size = max(a[0][0] for a in atoms) + 1
        return cls(domain_size, atoms)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, domain_size: int | None = None) -> FiniteDistribution:
        return cls.from_text(Path(path).read_text(), domain_size)


# -- losses -----------------------------------------------------------------


def _check_domain(a, b):
    if a.domain_size != b.domain_size:
        raise DomainError(f"domain sizes differ: {a.domain_size} vs {b.domain_size}")


def population_loss(h: Hypothesis, D: FiniteDistribution) -> float:
    """Probability that ``h`` mislabels an example drawn from ``D``."""
    _check_domain(h, D)
    wrong = h.labels[D.points] != D.labels
    return math.fsum(D.probs[wrong].tolist())


def population_losses(H: HypothesisClass, D: FiniteDistribution) -> np.ndarray:
    _check_domain(H, D)
    return np.array([population_loss(h, D) for h in H.members])


def empirical_loss(h: Hypothesis, S: Sample) -> float:
    _check_domain(h, S)
    n = S.size
    if n == 0:
        raise ValueError("empirical loss of an empty sample")
    lab = h.labels.astype(np.int64)
    wrong = int(S.counts[:, 0] @ lab + S.counts[:, 1] @ (1 - lab))
    return wrong / n


def class_loss(H: HypothesisClass, D: FiniteDistribution) -> float:
    """Best population loss attained in ``H``."""
    H.require_nonempty()
    return float(population_losses(H, D).min())


def draw_sample(D: FiniteDistribution, n: int, seed: int) -> Sample:
    """``n`` i.i.d. draws from ``D``, returned as a canonical multiset."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    rng = numpy_rng(seed)
    p = D.probs / D.probs.sum()
    draws = rng.multinomial(int(n), p)
    counts = np.zeros((D.domain_size, 2), dtype=np.int64)
    counts[D.points, D.labels] = draws
    return Sample(D.domain_size, counts)


def draw_samples(D: FiniteDistribution, n: int, seeds) -> np.ndarray:
    """Stack of ``draw_sample`` count arrays, one per seed: shape ``(len(seeds), N, 2)``."""
    out = np.zeros((len(seeds), D.domain_size, 2), dtype=np.int64)
    for i, s in enumerate(seeds):
        out[i] = draw_sample(D, n, int(s)).counts
    return out


# -- constructions ----------------------------------------------------------


def mix_with_point_mass(D: FiniteDistribution, x_star: int, b_star: int, gamma_prime: float) -> FiniteDistribution:
    """``gamma' * D + (1 - gamma') * delta_{(x*, b*)}``."""
    if not 0.0 < gamma_prime <= 1.0:
        raise ValueError(f"gamma_prime must lie in (0, 1], got {gamma_prime}")
    if not 0 <= x_star < D.domain_size or b_star not in (0, 1):
        raise DomainError(f"invalid point mass ({x_star}, {b_star})")
    table = {(e.point, e.label): gamma_prime * p for e, p in D.atoms}
    key = (int(x_star), int(b_star))
    table[key] = table.get(key, 0.0) + (1.0 - gamma_prime)
    table = {k: v for k, v in table.items() if v > 0.0}
    total = math.fsum(table.values())
    return FiniteDistribution(D.domain_size, [(k, v / total) for k, v in table.items()])


def condition_on_consistency(D: FiniteDistribution, h_star: Hypothesis) -> FiniteDistribution:
    """``D`` conditioned on examples that ``h_star`` labels correctly."""
    _check_domain(h_star, D)
    kept = [(e, p) for e, p in D.atoms if h_star(e.point) == e.label and p > 0.0]
    mass = math.fsum(p for _, p in kept)
    if mass <= 0.0:
        raise ValueError("h_star is inconsistent with every atom of D")
    return FiniteDistribution(D.domain_size, [(e, p / mass) for e, p in kept])


def threshold_cuts(n: int, domain_size: int | None = None) -> list[int]:
    """1-indexed cut positions ``c_1 < ... < c_{n+1}`` of ``threshold_class``."""
    m = n if domain_size is None else domain_size
    # nearest-integer spacing; the identity when m == n
    return [1 + (2 * k * m + n) // (2 * n) for k in range(n + 1)]


def threshold_class(n: int, domain_size: int | None = None) -> HypothesisClass:
    """The ``n + 1`` thresholds ``h_t(i) = 1 iff i >= t`` over ``[n]``.

    With ``domain_size = M`` the same ``n + 1`` thresholds are laid over a
    domain of ``M`` points, cut positions spread evenly (see ``threshold_cuts``).
    """
    if n < 1:
        raise ValueError("threshold class needs n >= 1")
    m = n if domain_size is None else int(domain_size)
    if m < n:
        raise ValueError("domain_size must be at least n")
    members = []
    for c in threshold_cuts(n, m):
        members.append(Hypothesis.from_labels(1 if i + 1 >= c else 0 for i in range(m)))
    return HypothesisClass(m, members)


def full_cube(n: int) -> HypothesisClass:
    return HypothesisClass(n, [Hypothesis(n, b) for b in range(1 << n)])


def random_class(domain_size: int, size: int, seed: int) -> HypothesisClass:
    """``size`` distinct hypotheses chosen uniformly without replacement."""
    total = 1 << domain_size
    if not 0 <= size <= total:
        raise ValueError(f"cannot draw {size} distinct hypotheses over {domain_size} points")
    rng = numpy_rng(seed)
    bits = rng.choice(total, size=size, replace=False)
    return HypothesisClass(domain_size, [Hypothesis(domain_size, int(b)) for b in bits])


def median_threshold_distribution(m: int) -> FiniteDistribution:
    """Uniform over ``(x, 1[x >= floor(m/2)])`` for ``x in [m]`` (1-indexed)."""
    if m < 2:
        raise ValueError("median threshold distribution needs M >= 2")
    mstar = m // 2
    return FiniteDistribution.uniform(m, [(x - 1, 1 if x >= mstar else 0) for x in range(1, m + 1)])
