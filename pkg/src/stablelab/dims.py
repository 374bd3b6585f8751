"""Exact VC, Littlestone and threshold dimensions for small classes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from stablelab import _kernels
from stablelab.core import HypothesisClass

MAX_DOMAIN = 16
MAX_CLASS = 4096


class DeskScaleError(ValueError):
    """Input exceeds what the exponential calculators accept."""


def _check_scale(H: HypothesisClass):
    if H.domain_size > MAX_DOMAIN:
        raise DeskScaleError(f"domain size {H.domain_size} exceeds the limit {MAX_DOMAIN}")
    if len(H) > MAX_CLASS:
        raise DeskScaleError(f"class size {len(H)} exceeds the limit {MAX_CLASS}")


@dataclass(frozen=True)
class MistakeTree:
    """Complete binary tree of depth ``depth``; internal nodes in heap order.

    Node ``i`` has children ``2i+1`` (edge 0) and ``2i+2`` (edge 1).
    """

    depth: int
    points: tuple[int, ...]

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if len(self.points) != (1 << self.depth) - 1:
            raise ValueError(f"a depth-{self.depth} tree has {(1 << self.depth) - 1} internal nodes")

    def paths(self):
        """All ``2**depth`` root-to-leaf paths as tuples of ``(point, bit)``."""
        for bits in product((0, 1), repeat=self.depth):
            node, path = 0, []
            for b in bits:
                path.append((self.points[node], b))
                node = 2 * node + 1 + b
            yield tuple(path)


def _realizes(h, path) -> bool:
    return all(h(x) == b for x, b in path)


def shatters_tree(H: HypothesisClass, T: MistakeTree) -> bool:
    """True iff every root-to-leaf path of ``T`` is realized by a member of ``H``."""
    for x in T.points:
        if not 0 <= x < H.domain_size:
            raise ValueError(f"tree point {x} outside domain of size {H.domain_size}")
    return all(any(_realizes(h, p) for h in H) for p in T.paths())


def tree_from_shattered_set(points) -> MistakeTree:
    """Tree querying ``points[k]`` at every node of level ``k``."""
    points = list(points)
    nodes = []
    for level, x in enumerate(points):
        nodes.extend([x] * (1 << level))
    return MistakeTree(len(points), tuple(nodes))


def littlestone_dimension(H: HypothesisClass) -> int:
    """Depth of the deepest shattered mistake tree; -1 for the empty class."""
    _check_scale(H)
    return _kernels.littlestone(H.columns, len(H))


def vc_dimension(H: HypothesisClass) -> int:
    """Size of the largest shattered point set; -1 for the empty class."""
    _check_scale(H)
    return _kernels.vc_dimension([h.bits for h in H], H.domain_size)


def threshold_dimension(H: HypothesisClass, littlestone: int | None = None) -> int:
    """Largest staircase: points ``x_1..x_k`` and members with ``h_t(x_i) = 1 iff i >= t``.

    Points may be taken in any order. The all-zeros class has value 0.
    """
    _check_scale(H)
    if len(H) == 0:
        return 0
    if littlestone is None:
        littlestone = littlestone_dimension(H)
    # a staircase of size k forces Ldim >= floor(log2 k)
    upper = min(H.domain_size, len(H), (1 << (littlestone + 1)) - 1)
    return _kernels.threshold_dimension(H.columns, len(H), H.domain_size, upper)


def log_threshold_bound(d: int) -> int:
    """``floor(log2 d)`` for ``d >= 1``."""
    if d < 1:
        raise ValueError("the bound needs Littlestone dimension at least 1")
    return d.bit_length() - 1


def check_log_threshold_bound(H: HypothesisClass) -> bool:
    """Whether the threshold dimension is at least ``floor(log2 Ldim)``.

    Classes with Littlestone dimension below 1 satisfy it vacuously.
    """
    d = littlestone_dimension(H)
    if d < 1:
        return True
    return threshold_dimension(H, d) >= log_threshold_bound(d)


@dataclass(frozen=True)
class DimensionReport:
    vc: int
    littlestone: int
    threshold: int

    @property
    def bound_holds(self) -> bool:
        if self.littlestone < 1:
            return True
        return self.threshold >= log_threshold_bound(self.littlestone)


def dimension_report(H: HypothesisClass) -> DimensionReport:
    d = littlestone_dimension(H)
    return DimensionReport(vc=vc_dimension(H), littlestone=d, threshold=threshold_dimension(H, d))


# -- brute force ------------------------------------------------------------


def _find_tree(H: HypothesisClass, depth: int) -> MistakeTree | None:
    """Fill nodes in heap order, pruning prefixes realized by too few members."""
    members = list(H)
    nnodes = (1 << depth) - 1
    points = [0] * nnodes

    def node_path(i):
        path = []
        while i > 0:
            parent = (i - 1) // 2
            path.append((points[parent], (i - 1) % 2))
            i = parent
        return path[::-1]

    def fill(i):
        if i == nnodes:
            return True
        prefix = node_path(i)
        level = len(prefix)
        for x in range(H.domain_size):
            points[i] = x
            # both subtrees below this node need 2**(depth-level-1) witnesses each
            ok = True
            for b in (0, 1):
                path = prefix + [(x, b)]
                need = 1 << (depth - level - 1)
                if sum(1 for h in members if _realizes(h, path)) < need:
                    ok = False
                    break
            if ok and fill(i + 1):
                return True
        return False

    if depth == 0:
        return MistakeTree(0, ()) if members else None
    if fill(0):
        tree = MistakeTree(depth, tuple(points))
        return tree if shatters_tree(H, tree) else None
    return None


def deepest_shattered_tree(H: HypothesisClass) -> MistakeTree | None:
    """Explicit search for a deepest shattered tree; ``None`` for the empty class."""
    best = None
    depth = 0
    while (1 << depth) <= len(H):
        tree = _find_tree(H, depth)
        if tree is None:
            break
        best = tree
        depth += 1
    return best
