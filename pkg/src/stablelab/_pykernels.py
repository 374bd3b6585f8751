"""Pure-Python kernels.

Reference implementation of the hot loops. ``_ckernels.pyx`` mirrors every
function here operation for operation, so both backends return identical
results for identical inputs (including the random streams).
"""

from itertools import combinations
from math import floor, log, sqrt

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# Stirling-series coefficients for log-gamma
_LOGGAM_A = (
    8.333333333333333e-02,
    -2.777777777777778e-03,
    7.936507936507937e-04,
    -5.952380952380952e-04,
    8.417508417508418e-04,
    -1.917526917526918e-03,
    6.410256410256410e-03,
    -2.955065359477124e-02,
    1.796443723688307e-01,
    -1.39243221690590e00,
)
_LG2PI = 1.8378770664093453
_D1 = 1.7155277699214135
_D2 = 0.8989161620588988

BACKEND = "python"


class Stream:
    """splitmix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_double(self):
        # open interval (0, 1)
        return ((self.next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0)

    def interval(self, mx):
        """Uniform integer in [0, mx]."""
        if mx == 0:
            return 0
        mask = (1 << mx.bit_length()) - 1
        while True:
            v = self.next_u64() & mask
            if v <= mx:
                return v


def loggam(x):
    if x == 1.0 or x == 2.0:
        return 0.0
    n = int(7 - x) if x < 7.0 else 0
    x0 = x + n
    x2 = (1.0 / x0) * (1.0 / x0)
    gl0 = _LOGGAM_A[9]
    for k in range(8, -1, -1):
        gl0 *= x2
        gl0 += _LOGGAM_A[k]
    gl = gl0 / x0 + 0.5 * _LG2PI + (x0 - 0.5) * log(x0) - x0
    if x < 7.0:
        for _ in range(n):
            gl -= log(x0 - 1.0)
            x0 -= 1.0
    return gl


def logfactorial(k):
    return loggam(k + 1.0)


def _hyper_small(st, good, bad, sample):
    total = good + bad
    flip = sample > total // 2
    computed = total - sample if flip else sample
    rem_total = total
    rem_good = good
    while computed > 0 and rem_good > 0 and rem_total > rem_good:
        rem_total -= 1
        if st.interval(rem_total) < rem_good:
            rem_good -= 1
        computed -= 1
    if rem_total == rem_good:
        rem_good -= computed
    return rem_good if flip else good - rem_good


def _hyper_hrua(st, good, bad, sample):
    popsize = good + bad
    computed = min(sample, popsize - sample)
    mingb = min(good, bad)
    maxgb = max(good, bad)
    p = mingb / popsize
    q = maxgb / popsize
    a = computed * p + 0.5
    var = float(popsize - computed) * computed * p * q / (popsize - 1)
    c = sqrt(var + 0.5)
    h = _D1 * c + _D2
    m = int(floor(float(computed + 1) * (mingb + 1) / (popsize + 2)))
    g = (logfactorial(m) + logfactorial(mingb - m) + logfactorial(computed - m)
         + logfactorial(maxgb - computed + m))
    b = min(float(min(computed, mingb) + 1), floor(a + 16.0 * c))
    while True:
        u = st.next_double()
        v = st.next_double()
        x = a + h * (v - 0.5) / u
        if x < 0.0 or x >= b:
            continue
        k = int(floor(x))
        gp = (logfactorial(k) + logfactorial(mingb - k) + logfactorial(computed - k)
              + logfactorial(maxgb - computed + k))
        t = g - gp
        if u * (4.0 - u) - 3.0 <= t:
            break
        if u * (u - t) >= 1.0:
            continue
        if 2.0 * log(u) <= t:
            break
    if good > bad:
        k = computed - k
    if computed < sample:
        k = good - k
    return k


def hypergeometric(st, good, bad, sample):
    """Number of good items in a uniform draw of ``sample`` from ``good + bad``."""
    if 10 <= sample <= good + bad - 10:
        return _hyper_hrua(st, good, bad, sample)
    return _hyper_small(st, good, bad, sample)


def hypergeometric_draws(good, bad, sample, seed, size):
    st = Stream(seed)
    return np.array([hypergeometric(st, good, bad, sample) for _ in range(size)], dtype=np.int64)


def split_counts(counts, sizes, seed):
    """Uniformly partition a multiset (given as cell counts) into blocks.

    Returns an int64 array of shape (len(sizes), len(counts)).
    """
    counts = [int(c) for c in counts]
    sizes = [int(s) for s in sizes]
    ncells = len(counts)
    nblocks = len(sizes)
    if sum(counts) != sum(sizes):
        raise ValueError("block sizes must sum to the sample size")
    out = np.zeros((nblocks, ncells), dtype=np.int64)
    st = Stream(seed)
    rem = list(counts)
    rem_total = sum(counts)
    for b in range(nblocks - 1):
        need = sizes[b]
        pool = rem_total
        row = out[b]
        for a in range(ncells):
            if need == 0:
                break
            c = rem[a]
            if c == 0:
                continue
            rest = pool - c
            if rest == 0:
                x = need
            else:
                x = hypergeometric(st, c, rest, need)
            row[a] = x
            rem[a] = c - x
            need -= x
            pool = rest
        rem_total -= sizes[b]
    if nblocks:
        out[nblocks - 1] = rem
    return out


def _flog2(v):
    return v.bit_count().bit_length() - 1


def littlestone(cols, nmembers):
    """Littlestone dimension of the class whose point columns are ``cols``.

    ``cols[x]`` is the bitmask of members labelling point ``x`` with 1.
    """
    if nmembers == 0:
        return -1
    cols = [int(c) for c in cols]
    full = (1 << nmembers) - 1
    memo = {}

    def rec(mask):
        if mask & (mask - 1) == 0:
            return 0 if mask else -1
        got = memo.get(mask)
        if got is not None:
            return got
        cap = _flog2(mask)
        best = 0
        for c in cols:
            one = mask & c
            if one == 0 or one == mask:
                continue
            zero = mask ^ one
            if min(_flog2(one), _flog2(zero)) + 1 <= best:
                continue
            lo = rec(zero)
            if lo + 1 <= best:
                continue
            v = 1 + min(lo, rec(one))
            if v > best:
                best = v
                if best == cap:
                    break
        memo[mask] = best
        return best

    return rec(full)


def vc_dimension(members, npoints):
    members = [int(h) for h in members]
    if not members:
        return -1
    cap = min(npoints, len(members).bit_length() - 1)
    best = 0
    for s in range(1, cap + 1):
        need = 1 << s
        found = False
        for pts in combinations(range(npoints), s):
            mask = 0
            for x in pts:
                mask |= 1 << x
            if len({h & mask for h in members}) == need:
                found = True
                break
        if not found:
            break
        best = s
    return best


def threshold_dimension(cols, nmembers, npoints, upper):
    """Largest staircase size, searching ordered point sequences.

    ``upper`` is a known upper bound; the search stops once it is reached.
    """
    if nmembers == 0:
        return 0
    cols = [int(c) for c in cols]
    full = (1 << nmembers) - 1
    zeros = [full ^ c for c in cols]
    best = 1 if any(cols) else 0
    if best >= upper:
        return best
    seen = set()

    def dfs(j, ws, z, used):
        nonlocal best
        key = (used, z, ws)
        if key in seen:
            return False
        seen.add(key)
        cand = []
        for x in range(npoints):
            if used >> x & 1:
                continue
            c = cols[x]
            if z & c == 0:
                continue
            if all(w & c for w in ws):
                cand.append(x)
        if j + len(cand) <= best:
            return False
        for x in cand:
            c = cols[x]
            nws = tuple(w & c for w in ws) + (z & c,)
            if j + 1 > best:
                best = j + 1
                if best >= upper:
                    return True
            if dfs(j + 1, nws, z & zeros[x], used | (1 << x)):
                return True
        return False

    dfs(0, (), full, 0)
    return best
