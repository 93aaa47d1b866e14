"""Recursive norm evaluation on finitely supported vectors, with certificates.

The norm solves
    N(x) = max( max_i |x_i|,  max_l  theta_l * max sum_i N(E_i x) )
where the inner max runs over tuples E_1 < ... < E_k (k >= 2) of successive
sets admissible for level l's family.  Only covers of support *suffixes* are
enumerated: a skipped interior or trailing support point can always be
absorbed into a neighbouring block without losing admissibility or value,
but a skipped prefix matters, because the first block's minimum gates
admissibility.  Single-block tuples contribute theta * N(E_1 x) < N(x) and
are never optimal, so they are skipped.

Norms here are 1-unconditional: every value depends only on |x|, so all
memo tables key on the absolute entry tuple.  Cached certificates therefore
describe |x|; they verify against any sign pattern because leaf evaluation
takes absolute values.

Shared memo tables are module-level dicts.  Insertion is idempotent (values
are deterministic), which keeps concurrent use safe under the interpreter's
atomic dict operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple, Union

from .core import (
    DEFAULT_THETA_PRECISION,
    PRECISION_CAP,
    BlockPartition,
    FinVec,
    IndeterminateComparisonError,
    IntervalScalar,
    PrecisionExhaustedError,
    TsinormError,
    enumerate_partitions,
    restrict,
    sup_norm,
)
from .families import (
    AdmissibilityFamily,
    Level,
    MixedSpaceSpec,
    is_admissible,
    levels_needed,
    resolve_theta,
    theta_is_rational,
    tsirelson_spec,
)

Scalar = Union[Fraction, IntervalScalar]

_HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Leaf:
    """Sup-norm witness: value is |x[index]|; index None for the zero vector."""
    index: Optional[int]


@dataclass(frozen=True)
class Split:
    """One admissible split: value is theta * sum of the children's values."""
    level_index: int
    theta: Scalar
    partition: BlockPartition
    children: Tuple["PrimalCertificate", ...]


@dataclass(frozen=True)
class PrimalCertificate:
    value: Scalar
    witness: Union[Leaf, Split]


def _abs_entries(x: FinVec) -> tuple:
    return tuple((i, abs(c)) for i, c in x.entries)


# ---------------------------------------------------------------------------
# specialized route: Schreier family, weight 1/2

_FJ_MEMO: dict = {}
_FJ_LEVEL_MEMO: dict = {}


def _schreier_split_max(entries: tuple, slice_value: Callable[[int, int], Fraction]):
    """Best value of (1/2) * sum over admissible splits of suffix covers.

    entries is the positive sparse vector as ((index, coeff), ...);
    slice_value(a, b) must return the norm of entries[a:b].  Returns
    (value, suffix_start, k, cut_positions) or None when no k >= 2 split
    is admissible.  The cut-point maximization is a dynamic program over
    (block count, start position); admissibility only constrains the
    block count k <= min(len(tail), first index of tail), so the program
    is exact.
    """
    m = len(entries)
    if m < 2:
        return None
    kcap = max(min(m - s, entries[s][0]) for s in range(m))
    if kcap < 2:
        return None

    cache: dict = {}

    def val(a: int, b: int) -> Fraction:
        v = cache.get((a, b))
        if v is None:
            v = slice_value(a, b)
            cache[(a, b)] = v
        return v

    # g[j][a]: best sum of slice norms splitting entries[a:] into exactly
    # j blocks; argc[j][a] the first cut of one maximizer (smallest wins).
    g = [None] * (kcap + 1)
    argc = [None] * (kcap + 1)
    g[1] = [None] + [val(a, m) for a in range(1, m)]
    for j in range(2, kcap + 1):
        row = [None] * m
        cuts = [None] * m
        for a in range(m - j + 1):
            best = None
            best_cut = None
            for c in range(a + 1, m - j + 2):
                v = val(a, c) + g[j - 1][c]
                if best is None or v > best:
                    best, best_cut = v, c
            row[a] = best
            cuts[a] = best_cut
        g[j] = row
        argc[j] = cuts

    found = None
    for s in range(m):
        lim = min(m - s, entries[s][0])
        for k in range(2, lim + 1):
            v = g[k][s]
            if found is None or v > found[0]:
                found = (v, s, k)
    if found is None:
        return None
    total, s, k = found
    cut_positions = []
    a = s
    for j in range(k, 1, -1):
        c = argc[j][a]
        cut_positions.append(c)
        a = c
    return (_HALF * total, s, k, tuple(cut_positions))


def _fj_eval(entries: tuple, memo: dict) -> PrimalCertificate:
    cert = memo.get(entries)
    if cert is not None:
        return cert
    if not entries:
        cert = PrimalCertificate(Fraction(0), Leaf(None))
        memo[entries] = cert
        return cert
    sup = max(c for _, c in entries)
    value: Fraction = sup
    witness: Union[Leaf, Split] = Leaf(next(i for i, c in entries if c == sup))
    split = _schreier_split_max(
        entries, lambda a, b: _fj_eval(entries[a:b], memo).value)
    if split is not None and split[0] > value:
        v, s, k, cuts = split
        bounds = (s,) + cuts + (len(entries),)
        blocks = []
        children = []
        for t in range(k):
            seg = entries[bounds[t]:bounds[t + 1]]
            blocks.append(tuple(i for i, _ in seg))
            children.append(_fj_eval(seg, memo))
        rebuilt = _HALF * sum(ch.value for ch in children)
        if rebuilt != v:
            raise AssertionError(f"split reconstruction mismatch: {rebuilt} != {v}")
        value = v
        witness = Split(0, _HALF, BlockPartition.of(*blocks), tuple(children))
    cert = PrimalCertificate(value, witness)
    memo[entries] = cert
    return cert


def fj_norm(x: FinVec, *, use_cache: bool = True):
    """Exact norm for the Schreier family at weight 1/2, with certificate.

    Returns (value, certificate).  The certificate's split nodes refer to
    level 0 of the single-level space returned by tsirelson_spec().
    """
    memo = _FJ_MEMO if use_cache else {}
    cert = _fj_eval(_abs_entries(x), memo)
    return cert.value, cert


def fj_norm_level(x: FinVec, n: int, *, use_cache: bool = True) -> Fraction:
    """n-th approximant: level 0 is the sup norm, each level adds one split."""
    if n < 0:
        raise ValueError(f"level {n} < 0")
    memo = _FJ_LEVEL_MEMO if use_cache else {}
    return _fj_level(_abs_entries(x), n, memo)


def _fj_level(entries: tuple, n: int, memo: dict) -> Fraction:
    if not entries:
        return Fraction(0)
    key = (entries, n)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if n == 0:
        value = max(c for _, c in entries)
    else:
        value = _fj_level(entries, n - 1, memo)
        split = _schreier_split_max(
            entries, lambda a, b: _fj_level(entries[a:b], n - 1, memo))
        if split is not None and split[0] > value:
            value = split[0]
    memo[key] = value
    return value


# ---------------------------------------------------------------------------
# generic route: arbitrary level lists, enumeration per level

@dataclass(frozen=True)
class _ResolvedLevel:
    index: int                      # position in the space's level list
    family: AdmissibilityFamily
    theta: Scalar


_MIXED_MEMOS: dict = {}


def _improves(cand: Scalar, incumbent: Scalar) -> bool:
    """Certified strict cand > incumbent; identical enclosures tie (False)."""
    if isinstance(cand, Fraction) and isinstance(incumbent, Fraction):
        return cand > incumbent
    c = IntervalScalar.coerce(cand)
    b = IntervalScalar.coerce(incumbent)
    r = b.certified_lt(c)
    if r is not None:
        return r
    if c.lo == b.lo and c.hi == b.hi:
        return False
    raise IndeterminateComparisonError(
        f"cannot order branch values {b} and {c}")


def _mixed_eval(entries: tuple, rlevels: tuple, memo: dict,
                interval_mode: bool) -> PrimalCertificate:
    cert = memo.get(entries)
    if cert is not None:
        return cert
    if not entries:
        zero = IntervalScalar.point(0) if interval_mode else Fraction(0)
        cert = PrimalCertificate(zero, Leaf(None))
        memo[entries] = cert
        return cert
    sup = max(c for _, c in entries)
    value: Scalar = IntervalScalar.point(sup) if interval_mode else sup
    witness: Union[Leaf, Split] = Leaf(next(i for i, c in entries if c == sup))
    support = tuple(i for i, _ in entries)
    m = len(entries)
    for lev in rlevels:
        for s in range(m):
            tail = support[s:]
            for k in range(2, len(tail) + 1):
                for P in enumerate_partitions(tail, k):
                    if not is_admissible(lev.family, P):
                        continue
                    children = []
                    pos = s
                    for blk in P.blocks:
                        seg = entries[pos:pos + len(blk)]
                        pos += len(blk)
                        children.append(_mixed_eval(seg, rlevels, memo, interval_mode))
                    total = children[0].value
                    for ch in children[1:]:
                        total = total + ch.value
                    cand = lev.theta * total
                    if _improves(cand, value):
                        value = cand
                        witness = Split(lev.index, lev.theta, P, tuple(children))
    cert = PrimalCertificate(value, witness)
    memo[entries] = cert
    return cert


def _kept_levels_with_indices(spec: MixedSpaceSpec, support) -> tuple:
    kept, _dropped = levels_needed(spec, support)
    out = []
    for idx, lv in enumerate(spec.levels):
        if any(lv is k for k in kept):
            out.append((idx, lv))
    return tuple(out)


def mixed_norm(spec: MixedSpaceSpec, x: FinVec, *,
               precision: Optional[int] = None,
               precision_cap: Optional[int] = None,
               use_cache: bool = True):
    """Norm of x in the mixed space, with certificate.

    Exact Fraction when every level relevant to supp(x) has a rational
    weight; otherwise a certified IntervalScalar enclosure, produced with
    the working precision doubled until every branch comparison is
    decided (or the cap is hit, raising PrecisionExhaustedError).
    """
    kept = _kept_levels_with_indices(spec, x.support)
    entries = _abs_entries(x)
    symbolic = any(not theta_is_rational(lv.theta) for _, lv in kept)
    if not symbolic:
        rlevels = tuple(_ResolvedLevel(i, lv.family, lv.theta) for i, lv in kept)
        memo = _get_mixed_memo((spec.cache_key(), None), use_cache)
        cert = _mixed_eval(entries, rlevels, memo, interval_mode=False)
        return cert.value, cert

    p = precision if precision is not None else DEFAULT_THETA_PRECISION
    cap = precision_cap if precision_cap is not None else PRECISION_CAP
    if p > cap:
        cap = p
    while True:
        rlevels = tuple(
            _ResolvedLevel(i, lv.family,
                           resolve_theta(lv.theta, p) if not theta_is_rational(lv.theta)
                           else IntervalScalar.point(lv.theta))
            for i, lv in kept)
        memo = _get_mixed_memo((spec.cache_key(), p), use_cache)
        try:
            cert = _mixed_eval(entries, rlevels, memo, interval_mode=True)
            return cert.value, cert
        except IndeterminateComparisonError as exc:
            if p >= cap:
                raise PrecisionExhaustedError(
                    f"branch comparison undecided at precision cap {cap}: {exc}"
                ) from exc
            p = min(p * 2, cap)


def _get_mixed_memo(key, use_cache: bool) -> dict:
    if not use_cache:
        return {}
    memo = _MIXED_MEMOS.get(key)
    if memo is None:
        memo = _MIXED_MEMOS.setdefault(key, {})
    return memo


def clear_caches() -> None:
    _FJ_MEMO.clear()
    _FJ_LEVEL_MEMO.clear()
    _MIXED_MEMOS.clear()


# ---------------------------------------------------------------------------
# certificate verification

def _scalar_eq(a: Scalar, b: Scalar) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    a = IntervalScalar.coerce(a)
    b = IntervalScalar.coerce(b)
    return a.lo == b.lo and a.hi == b.hi


def _check_theta(level: Level, stored: Scalar) -> None:
    if theta_is_rational(level.theta):
        if not isinstance(stored, Fraction) or stored != level.theta:
            raise TsinormError(
                f"certificate weight {stored} differs from the level's {level.theta}")
        return
    if not isinstance(stored, IntervalScalar):
        raise TsinormError("symbolic level needs an interval weight in the certificate")
    if not (0 < stored.lo and stored.hi < 1):
        raise TsinormError(f"certificate weight {stored} outside (0, 1)")
    # Cross-check against a fresh enclosure tight enough to catch a lie:
    # any two valid enclosures of the same weight intersect.
    width = stored.width
    p = DEFAULT_THETA_PRECISION
    while p < PRECISION_CAP and width != 0 and Fraction(1, 2 ** p) >= width:
        p *= 2
    fresh = resolve_theta(level.theta, min(p, PRECISION_CAP))
    if stored.hi < fresh.lo or fresh.hi < stored.lo:
        raise TsinormError(
            f"certificate weight {stored} does not intersect a fresh enclosure {fresh}")


def _reverify(spec: MixedSpaceSpec, y: FinVec, cert: PrimalCertificate) -> None:
    w = cert.witness
    if isinstance(w, Leaf):
        if w.index is None:
            if not y.is_zero:
                raise TsinormError("zero-vector leaf on a nonzero vector")
            recomputed: Scalar = Fraction(0)
        else:
            c = abs(y.coeff(w.index))
            if c == 0:
                raise TsinormError(f"leaf index {w.index} outside the support")
            if c != sup_norm(y):
                raise TsinormError(
                    f"leaf at {w.index} does not attain the sup norm of {y}")
            recomputed = c
        if not _scalar_eq(cert.value, recomputed):
            raise TsinormError(
                f"leaf value {cert.value} does not match recomputed {recomputed}")
        return
    if not isinstance(w, Split):
        raise TsinormError(f"unknown witness node {w!r}")
    if not 0 <= w.level_index < len(spec.levels):
        raise TsinormError(f"level index {w.level_index} out of range")
    level = spec.levels[w.level_index]
    if not is_admissible(level.family, w.partition):
        raise TsinormError(
            f"partition {w.partition.blocks} is not admissible for level {w.level_index}")
    if w.partition.k < 2:
        raise TsinormError("split with fewer than two blocks")
    if len(w.children) != w.partition.k:
        raise TsinormError("child count differs from block count")
    _check_theta(level, w.theta)
    total: Optional[Scalar] = None
    for blk, child in zip(w.partition.blocks, w.children):
        _reverify(spec, restrict(y, blk), child)
        total = child.value if total is None else total + child.value
    recomputed = w.theta * total
    if not _scalar_eq(cert.value, recomputed):
        raise TsinormError(
            f"split value {cert.value} does not match recomputed {recomputed}")


def verify_primal_certificate(spec: MixedSpaceSpec, x: FinVec,
                              cert: PrimalCertificate) -> None:
    """Re-evaluate the witness tree bottom-up; raise on any mismatch.

    Checks value reproduction, admissibility of every split, weight
    integrity per level, and sup-norm attainment at every leaf.  Uses no
    solver machinery: plain arithmetic only.
    """
    _reverify(spec, x, cert)


def verify_fj_certificate(x: FinVec, cert: PrimalCertificate) -> None:
    verify_primal_certificate(tsirelson_spec(), x, cert)
