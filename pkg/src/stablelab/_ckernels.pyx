# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Operation-for-operation twin of ``_pykernels``; results (including random
streams) are bit-identical. Class kernels take members packed in a uint64
mask, so they accept at most 64 members; the dispatcher in ``_kernels``
routes larger classes to the Python implementation.
"""

from libc.stdint cimport uint64_t, int64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.set cimport set as cset
from libcpp.vector cimport vector

import numpy as np

BACKEND = "compiled"
MAX_MEMBERS = 64

cdef extern from *:
    """
    #include <math.h>
    #include <stdint.h>

    static inline uint64_t sl_next_u64(uint64_t *s) {
        uint64_t z;
        *s += 0x9E3779B97F4A7C15ULL;
        z = *s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static inline double sl_next_double(uint64_t *s) {
        return ((double)(sl_next_u64(s) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    static inline int sl_bitlen(uint64_t v) {
        int n = 0;
        while (v) { n++; v >>= 1; }
        return n;
    }

    static inline uint64_t sl_interval(uint64_t *s, uint64_t mx) {
        uint64_t mask, v;
        int bl;
        if (mx == 0) return 0;
        bl = sl_bitlen(mx);
        mask = (bl == 64) ? ~0ULL : ((1ULL << bl) - 1);
        for (;;) {
            v = sl_next_u64(s) & mask;
            if (v <= mx) return v;
        }
    }

    static const double SL_A[10] = {
        8.333333333333333e-02, -2.777777777777778e-03,
        7.936507936507937e-04, -5.952380952380952e-04,
        8.417508417508418e-04, -1.917526917526918e-03,
        6.410256410256410e-03, -2.955065359477124e-02,
        1.796443723688307e-01, -1.39243221690590e+00};

    static double sl_loggam(double x) {
        double x0, x2, gl, gl0;
        int64_t k, n;
        if (x == 1.0 || x == 2.0) return 0.0;
        n = (x < 7.0) ? (int64_t)(7 - x) : 0;
        x0 = x + n;
        x2 = (1.0 / x0) * (1.0 / x0);
        gl0 = SL_A[9];
        for (k = 8; k >= 0; k--) {
            gl0 *= x2;
            gl0 += SL_A[k];
        }
        gl = gl0 / x0 + 0.5 * 1.8378770664093453 + (x0 - 0.5) * log(x0) - x0;
        if (x < 7.0) {
            for (k = 0; k < n; k++) {
                gl -= log(x0 - 1.0);
                x0 -= 1.0;
            }
        }
        return gl;
    }

    static inline double sl_logfact(int64_t k) { return sl_loggam((double)k + 1.0); }

    static int64_t sl_hyper_small(uint64_t *s, int64_t good, int64_t bad, int64_t sample) {
        int64_t total = good + bad;
        int flip = sample > total / 2;
        int64_t computed = flip ? total - sample : sample;
        int64_t rem_total = total, rem_good = good;
        while (computed > 0 && rem_good > 0 && rem_total > rem_good) {
            rem_total--;
            if ((int64_t)sl_interval(s, (uint64_t)rem_total) < rem_good) rem_good--;
            computed--;
        }
        if (rem_total == rem_good) rem_good -= computed;
        return flip ? rem_good : good - rem_good;
    }

    static int64_t sl_hyper_hrua(uint64_t *s, int64_t good, int64_t bad, int64_t sample) {
        int64_t popsize = good + bad;
        int64_t computed = sample < popsize - sample ? sample : popsize - sample;
        int64_t mingb = good < bad ? good : bad;
        int64_t maxgb = good < bad ? bad : good;
        double p = (double)mingb / (double)popsize;
        double q = (double)maxgb / (double)popsize;
        double a = (double)computed * p + 0.5;
        double var = (double)(popsize - computed) * (double)computed * p * q / (double)(popsize - 1);
        double c = sqrt(var + 0.5);
        double h = 1.7155277699214135 * c + 0.8989161620588988;
        int64_t m = (int64_t)floor((double)(computed + 1) * (double)(mingb + 1) / (double)(popsize + 2));
        double g = sl_logfact(m) + sl_logfact(mingb - m) + sl_logfact(computed - m)
                   + sl_logfact(maxgb - computed + m);
        int64_t lim = (computed < mingb ? computed : mingb) + 1;
        double b1 = (double)lim, b2 = floor(a + 16.0 * c);
        double b = b1 < b2 ? b1 : b2;
        int64_t k;
        for (;;) {
            double u = sl_next_double(s);
            double v = sl_next_double(s);
            double x = a + h * (v - 0.5) / u;
            double gp, t;
            if (x < 0.0 || x >= b) continue;
            k = (int64_t)floor(x);
            gp = sl_logfact(k) + sl_logfact(mingb - k) + sl_logfact(computed - k)
                 + sl_logfact(maxgb - computed + k);
            t = g - gp;
            if (u * (4.0 - u) - 3.0 <= t) break;
            if (u * (u - t) >= 1.0) continue;
            if (2.0 * log(u) <= t) break;
        }
        if (good > bad) k = computed - k;
        if (computed < sample) k = good - k;
        return k;
    }

    static int64_t sl_hyper(uint64_t *s, int64_t good, int64_t bad, int64_t sample) {
        if (sample >= 10 && sample <= good + bad - 10) return sl_hyper_hrua(s, good, bad, sample);
        return sl_hyper_small(s, good, bad, sample);
    }

    static inline int sl_popcount(uint64_t v) { return __builtin_popcountll(v); }
    static inline int sl_flog2(uint64_t v) { return sl_bitlen((uint64_t)sl_popcount(v)) - 1; }
    """
    uint64_t sl_next_u64(uint64_t *s) nogil
    double sl_loggam(double x) nogil
    int64_t sl_hyper(uint64_t *s, int64_t good, int64_t bad, int64_t sample) nogil
    int sl_popcount(uint64_t v) nogil
    int sl_flog2(uint64_t v) nogil


def loggam(double x):
    return sl_loggam(x)


def hypergeometric_draws(int64_t good, int64_t bad, int64_t sample, seed, Py_ssize_t size):
    cdef uint64_t st = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    out = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i
    for i in range(size):
        o[i] = sl_hyper(&st, good, bad, sample)
    return out


def split_counts(counts, sizes, seed):
    """Uniformly partition a multiset (given as cell counts) into blocks."""
    cdef int64_t[::1] c = np.ascontiguousarray(counts, dtype=np.int64).copy()
    cdef int64_t[::1] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef Py_ssize_t ncells = c.shape[0], nblocks = sz.shape[0]
    cdef Py_ssize_t a, blk
    cdef int64_t total = 0, stotal = 0, need, pool, rest, x, cc
    for a in range(ncells):
        total += c[a]
    for blk in range(nblocks):
        stotal += sz[blk]
    if total != stotal:
        raise ValueError("block sizes must sum to the sample size")
    out = np.zeros((nblocks, ncells), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef uint64_t st = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t rem_total = total
    with nogil:
        for blk in range(nblocks - 1):
            need = sz[blk]
            pool = rem_total
            for a in range(ncells):
                if need == 0:
                    break
                cc = c[a]
                if cc == 0:
                    continue
                rest = pool - cc
                if rest == 0:
                    x = need
                else:
                    x = sl_hyper(&st, cc, rest, need)
                o[blk, a] = x
                c[a] = cc - x
                need -= x
                pool = rest
            rem_total -= sz[blk]
        if nblocks > 0:
            for a in range(ncells):
                o[nblocks - 1, a] = c[a]
    return out


cdef int _ldim(uint64_t mask, uint64_t* cols, int npoints,
               unordered_map[uint64_t, int]& memo) noexcept nogil:
    if mask & (mask - 1) == 0:
        return 0 if mask else -1
    cdef unordered_map[uint64_t, int].iterator it = memo.find(mask)
    if it != memo.end():
        return memo[mask]
    cdef int cap = sl_flog2(mask)
    cdef int best = 0, lo, hi, v, x, fz, fo
    cdef uint64_t one, zero
    for x in range(npoints):
        one = mask & cols[x]
        if one == 0 or one == mask:
            continue
        zero = mask ^ one
        fz = sl_flog2(zero)
        fo = sl_flog2(one)
        if (fz if fz < fo else fo) + 1 <= best:
            continue
        lo = _ldim(zero, cols, npoints, memo)
        if lo + 1 <= best:
            continue
        hi = _ldim(one, cols, npoints, memo)
        v = 1 + (lo if lo < hi else hi)
        if v > best:
            best = v
            if best == cap:
                break
    memo[mask] = best
    return best


cdef uint64_t _full(int nmembers) noexcept nogil:
    if nmembers >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return ((<uint64_t>1) << nmembers) - 1


def littlestone(cols, int nmembers):
    if nmembers == 0:
        return -1
    if nmembers > 64:
        raise ValueError("compiled kernel supports at most 64 members")
    cdef vector[uint64_t] cv
    for c in cols:
        cv.push_back(<uint64_t>int(c))
    cdef unordered_map[uint64_t, int] memo
    cdef int res
    with nogil:
        res = _ldim(_full(nmembers), cv.data(), <int>cv.size(), memo)
    return res


def vc_dimension(members, int npoints):
    cdef vector[uint64_t] hs
    for h in members:
        hs.push_back(<uint64_t>int(h))
    cdef Py_ssize_t m = hs.size()
    if m == 0:
        return -1
    if npoints > 63:
        raise ValueError("compiled kernel supports at most 63 points")
    cdef int cap = 0
    while (m >> (cap + 1)) > 0:
        cap += 1
    if npoints < cap:
        cap = npoints
    cdef int best = 0, s, j, k
    cdef uint64_t mask, limit, t, need, pat
    cdef vector[uint64_t] seen
    cdef bint found
    cdef uint64_t stamp = 0
    cdef Py_ssize_t i
    cdef uint64_t distinct
    with nogil:
        for s in range(1, cap + 1):
            need = (<uint64_t>1) << s
            found = False
            mask = need - 1
            limit = (<uint64_t>1) << npoints
            while mask < limit:
                # count distinct projections onto the point set ``mask``
                seen.clear()
                distinct = 0
                for i in range(m):
                    pat = hs[i] & mask
                    k = 0
                    for j in range(<int>seen.size()):
                        if seen[j] == pat:
                            k = 1
                            break
                    if k == 0:
                        seen.push_back(pat)
                        distinct += 1
                if distinct == need:
                    found = True
                    break
                # next subset with the same popcount (Gosper's hack)
                t = mask & (~mask + 1)
                pat = mask + t
                mask = (((pat ^ mask) >> 2) // t) | pat
            if not found:
                break
            best = s
    return best


cdef struct TDState:
    uint64_t* cols
    uint64_t* zeros
    int npoints
    int upper
    int best


cdef bint _tdfs(TDState* S, int j, uint64_t* ws, uint64_t z, uint64_t used,
                cset[vector[uint64_t]]& seen) noexcept nogil:
    cdef vector[uint64_t] key
    key.push_back(used)
    key.push_back(z)
    cdef int i, x, ncand = 0
    for i in range(j):
        key.push_back(ws[i])
    if seen.count(key):
        return False
    seen.insert(key)
    cdef int cand[64]
    cdef uint64_t c
    cdef bint ok
    for x in range(S.npoints):
        if (used >> x) & 1:
            continue
        c = S.cols[x]
        if z & c == 0:
            continue
        ok = True
        for i in range(j):
            if ws[i] & c == 0:
                ok = False
                break
        if ok:
            cand[ncand] = x
            ncand += 1
    if j + ncand <= S.best:
        return False
    cdef uint64_t nws[65]
    cdef int q
    for q in range(ncand):
        x = cand[q]
        c = S.cols[x]
        for i in range(j):
            nws[i] = ws[i] & c
        nws[j] = z & c
        if j + 1 > S.best:
            S.best = j + 1
            if S.best >= S.upper:
                return True
        if _tdfs(S, j + 1, nws, z & S.zeros[x], used | ((<uint64_t>1) << x), seen):
            return True
    return False


def threshold_dimension(cols, int nmembers, int npoints, int upper):
    if nmembers == 0:
        return 0
    if nmembers > 64 or npoints > 64:
        raise ValueError("compiled kernel supports at most 64 members and 64 points")
    cdef vector[uint64_t] cv, zv
    cdef uint64_t full = _full(nmembers)
    anyone = False
    for c in cols:
        cv.push_back(<uint64_t>int(c))
        zv.push_back(full ^ <uint64_t>int(c))
        if int(c):
            anyone = True
    cdef TDState S
    S.cols = cv.data()
    S.zeros = zv.data()
    S.npoints = npoints
    S.upper = upper
    S.best = 1 if anyone else 0
    if S.best >= upper:
        return S.best
    cdef cset[vector[uint64_t]] seen
    cdef uint64_t ws0[1]
    with nogil:
        _tdfs(&S, 0, ws0, full, 0, seen)
    return S.best
