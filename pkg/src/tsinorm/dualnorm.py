"""Dual norms computed exactly as the gauge of the generated ball.

The unit ball of the dual norm is the closed convex hull of the norming
functionals together with zero.  For a finitely supported x that gauge
is a linear program, and the value gets pinned from both sides:

* hull program: least total weight writing x as a nonnegative
  combination of stored functionals (each solution is an upper bound),
* ball program: largest pairing of x against a vector of primal norm at
  most one (each such vector is a lower bound).

Strong LP duality makes the two optima equal; the implementation solves
both independently and treats disagreement as an internal failure, never
as an answer.  The iterative rho upper bounds, the implicit-equation
checker, and the l1-variant falsifier all reduce to these exact values.

Generators are built over supp(x) rather than the whole window [1, max
supp(x)]: admissibility only reads supports, so the closure over the
sub-index-set holds exactly the window functionals supported inside
supp(x), and the discarded ones pair with x through zero coordinates
only.  Pruning to maximal functionals is also harmless here: the sign
variants of a dominating pattern span a coordinate box that contains
every vector it dominates, so the convex hull is unchanged.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

from .core import (
    DEFAULT_NORMING_BUDGET,
    DEFAULT_THETA_PRECISION,
    PRECISION_CAP,
    BlockPartition,
    FinVec,
    IntervalScalar,
    PrecisionExhaustedError,
    TsinormError,
    ell1_norm,
    enumerate_partitions,
    format_scalar,
    format_vector,
    pairing,
    parse_vector,
    restrict,
)
from .families import (
    Level,
    MixedSpaceSpec,
    is_admissible,
    resolve_theta,
    spec_from_config,
    spec_to_config,
    theta_is_rational,
)
from .lp import Constraint, LinearProgram, solve
from .norming import (
    NormingFunctional,
    _parse_tree as _parse_functional_tree,
    _tokenize_sexpr,
    _tree_sexpr as _functional_sexpr,
    _tree_vector as _functional_vector,
    norming_generators,
    verify_norming_functional,
)
from .primal import (
    Leaf,
    PrimalCertificate,
    Split,
    mixed_norm,
    verify_primal_certificate,
)

Q = Fraction

_GENERATOR_CACHE: dict = {}
_VALUE_MEMO: dict = {}
_CERT_MEMO: dict = {}
_RHO_MEMO: dict = {}
_SIGMA_LEVEL_MEMO: dict = {}


def clear_caches() -> None:
    """Drop every module-level memo (generators, values, certificates)."""
    _GENERATOR_CACHE.clear()
    _VALUE_MEMO.clear()
    _CERT_MEMO.clear()
    _RHO_MEMO.clear()
    _SIGMA_LEVEL_MEMO.clear()


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class HullTerm:
    weight: Fraction
    functional: NormingFunctional


@dataclass(frozen=True)
class DualCertificate:
    """Both optimal witnesses for one dual-norm value.

    The hull terms satisfy sum(weight * functional) = x with weights
    summing to the value; the ball vector y has primal norm at most one
    (its certificate attains that norm) and pairs with x to the value.
    """
    value: Fraction
    hull_terms: Tuple[HullTerm, ...]
    ball_vector: FinVec
    ball_certificate: PrimalCertificate


@dataclass(frozen=True)
class RhoIterate:
    n: int
    value: Fraction
    mode: str = "partition-only"


def _require_rational(spec: MixedSpaceSpec, what: str) -> tuple:
    if spec.has_symbolic_theta:
        raise TsinormError(
            f"{what} needs rational weights at every level; space "
            f"{spec.name!r} has a symbolic one (use dual_norm_bounds for enclosures)")
    return tuple((i, lev.family, Q(lev.theta)) for i, lev in enumerate(spec.levels))


def _generators(spec: MixedSpaceSpec, support: tuple, budget: int):
    key = (spec.cache_key(), support)
    got = _GENERATOR_CACHE.get(key)
    if got is None:
        got = norming_generators(spec, support, budget)
        _GENERATOR_CACHE[key] = got
    return got


def _abs_patterns(generators) -> tuple:
    seen = {}
    for f in generators:
        seen.setdefault(f.coeffs.abs().entries, None)
    return tuple(sorted(seen))


def _solve_ball(spec: MixedSpaceSpec, xa_entries: tuple, budget: int):
    """max <|x|, z> over z >= 0 with a.z <= 1 for every nonnegative
    maximal pattern a.  By sign completeness this equals the maximum of
    <x, y> over the whole dual-ball polar, and |x|'s best y is sign(x)*z.
    Returns (value, z as dict)."""
    support = tuple(i for i, _ in xa_entries)
    gens = _generators(spec, support, budget)
    rows = [Constraint(tuple(dict(a).get(i, Q(0)) for i in support), "<=", Q(1))
            for a in _abs_patterns(gens)]
    objective = tuple(c for _, c in xa_entries)
    sol = solve(LinearProgram(objective, tuple(rows)), "max")
    if sol.status != "optimal":
        raise TsinormError(
            f"ball program ended {sol.status}; this cannot happen for a "
            "seeded generator set")
    z = {i: v for i, v in zip(support, sol.assignment) if v != 0}
    return sol.value, z


def _solve_hull(spec: MixedSpaceSpec, x: FinVec, budget: int):
    """min sum(c_f) over c >= 0 with sum(c_f * f) = x, f running over the
    signed maximal functionals on supp(x).  Returns (value, hull terms)."""
    support = x.support
    gens = _generators(spec, support, budget)
    xd = x.to_dict()
    columns = [dict(f.coeffs.entries) for f in gens]
    rows = []
    for i in support:
        rows.append(Constraint(tuple(col.get(i, Q(0)) for col in columns),
                               "=", xd[i]))
    sol = solve(LinearProgram(tuple(Q(1) for _ in columns), tuple(rows)), "min")
    if sol.status != "optimal":
        raise TsinormError(
            f"hull program ended {sol.status}; the unit functionals alone "
            "should have made it feasible")
    terms = tuple(HullTerm(w, f) for f, w in zip(gens, sol.assignment) if w != 0)
    return sol.value, terms


def dual_norm_value(spec: MixedSpaceSpec, x: FinVec,
                    budget: int = DEFAULT_NORMING_BUDGET) -> Fraction:
    """Exact dual norm, ball program only (no certificate assembled).

    The fast path for the iterators and checkers that need many values;
    dual_norm itself always runs both programs.  The norm only depends on
    absolute values, so the memo is shared across sign patterns.
    """
    _require_rational(spec, "dual_norm")
    if x.is_zero:
        return Q(0)
    key = (spec.cache_key(), x.abs().entries)
    got = _VALUE_MEMO.get(key)
    if got is None:
        got, _ = _solve_ball(spec, key[1], budget)
        _VALUE_MEMO[key] = got
    return got


def dual_norm(spec: MixedSpaceSpec, x: FinVec,
              budget: int = DEFAULT_NORMING_BUDGET):
    """Exact dual norm with a doubly-witnessed certificate.

    Returns (value, DualCertificate).  The hull and ball programs are
    solved independently; unequal optima raise TsinormError since they
    would mean the build itself is broken.  The ball witness is fed back
    through the primal recursion to certify it really lies in the unit
    ball.
    """
    _require_rational(spec, "dual_norm")
    if x.is_zero:
        value, cert = mixed_norm(spec, FinVec.zero())
        return Q(0), DualCertificate(Q(0), (), FinVec.zero(), cert)
    key = (spec.cache_key(), x.entries)
    got = _CERT_MEMO.get(key)
    if got is not None:
        return got

    hull_value, terms = _solve_hull(spec, x, budget)
    xa = x.abs()
    ball_value, z = _solve_ball(spec, xa.entries, budget)
    if hull_value != ball_value:
        raise TsinormError(
            f"internal consistency failure: hull optimum {hull_value} != "
            f"ball optimum {ball_value} for x = {x.to_dict()}")
    signs = {i: (1 if c > 0 else -1) for i, c in x.entries}
    y = FinVec.from_items({i: signs[i] * v for i, v in z.items()})
    ball_norm, ball_cert = mixed_norm(spec, y)
    if ball_norm > 1:
        raise TsinormError(
            f"internal consistency failure: ball witness has primal norm "
            f"{ball_norm} > 1")
    if pairing(x, y) != ball_value:
        raise TsinormError(
            "internal consistency failure: ball witness pairing drifted")
    cert = DualCertificate(hull_value, terms, y, ball_cert)
    _VALUE_MEMO.setdefault((spec.cache_key(), xa.entries), hull_value)
    _CERT_MEMO[key] = (hull_value, cert)
    return hull_value, cert


def verify_dual_certificate(spec: MixedSpaceSpec, x: FinVec,
                            cert: DualCertificate) -> None:
    """Re-check a dual certificate; raise TsinormError on any defect.

    The hull side is pure arithmetic plus tree admissibility, and proves
    the value from above.  The ball side re-runs the primal recursion on
    the witness (no linear programming) and proves it from below.
    """
    total = Q(0)
    combo: dict = {}
    for term in cert.hull_terms:
        if term.weight <= 0:
            raise TsinormError(f"hull weight {term.weight} is not positive")
        verify_norming_functional(spec, term.functional)
        total += term.weight
        for i, c in term.functional.coeffs.entries:
            combo[i] = combo.get(i, Q(0)) + term.weight * c
    if total != cert.value:
        raise TsinormError(
            f"hull weights sum to {total}, certificate claims {cert.value}")
    combo = {i: c for i, c in combo.items() if c != 0}
    if combo != x.to_dict():
        raise TsinormError("hull combination does not reproduce x")

    verify_primal_certificate(spec, cert.ball_vector, cert.ball_certificate)
    ball_norm, _ = mixed_norm(spec, cert.ball_vector)
    if ball_norm > 1:
        raise TsinormError(
            f"ball witness has primal norm {ball_norm}, outside the unit ball")
    if pairing(x, cert.ball_vector) != cert.value:
        raise TsinormError(
            f"ball witness pairs to {pairing(x, cert.ball_vector)}, "
            f"certificate claims {cert.value}")


def dual_norm_bounds(spec: MixedSpaceSpec, x: FinVec,
                     precision: Optional[int] = None,
                     budget: int = DEFAULT_NORMING_BUDGET) -> IntervalScalar:
    """Sound enclosure of the dual norm for specs with symbolic weights.

    Every generator coefficient is a product of level weights, so the
    ball constraints tighten and the gauge drops as any weight grows:
    the value is antitone in theta.  Substituting the rational upper
    bounds of all enclosures therefore gives a lower bound of the norm,
    and vice versa.  Rational specs come back as a point interval.
    """
    if precision is None:
        precision = DEFAULT_THETA_PRECISION
    if precision < 1:
        raise ValueError(f"precision must be >= 1, got {precision}")
    if precision > PRECISION_CAP:
        raise PrecisionExhaustedError(
            f"precision {precision} exceeds the cap {PRECISION_CAP}")
    if x.is_zero:
        return IntervalScalar.point(0)
    if not spec.has_symbolic_theta:
        return IntervalScalar.point(dual_norm_value(spec, x, budget))

    lo_levels = []
    hi_levels = []
    for lev in spec.levels:
        if theta_is_rational(lev.theta):
            lo_levels.append(lev)
            hi_levels.append(lev)
            continue
        enc = resolve_theta(lev.theta, precision)
        if not (0 < enc.lo and enc.hi < 1):
            raise PrecisionExhaustedError(
                f"weight enclosure [{enc.lo}, {enc.hi}] at precision "
                f"{precision} leaves (0, 1)")
        lo_levels.append(Level(lev.family, enc.lo))
        hi_levels.append(Level(lev.family, enc.hi))
    spec_lo = MixedSpaceSpec(spec.name + "-theta-lo", tuple(lo_levels))
    spec_hi = MixedSpaceSpec(spec.name + "-theta-hi", tuple(hi_levels))
    value_lo = dual_norm_value(spec_hi, x, budget)
    value_hi = dual_norm_value(spec_lo, x, budget)
    if value_lo > value_hi:
        raise TsinormError(
            "internal consistency failure: dual bounds came back inverted")
    return IntervalScalar(value_lo, value_hi)


# ---------------------------------------------------------------------------
# rho iteration (upper bounds only)

def _admissible_cover_values(levels, entries, n, recurse):
    """Yield (level_index, blocks, value) for every admissible partition of
    the support into k >= 2 covering blocks, value = (1/theta) * max of
    the recursive values on the blocks."""
    support = tuple(i for i, _ in entries)
    xd = dict(entries)
    for k in range(2, len(support) + 1):
        for P in enumerate_partitions(support, k):
            part_values = None
            for level_index, family, theta in levels:
                if not is_admissible(family, P):
                    continue
                if part_values is None:
                    part_values = [
                        recurse(tuple((i, xd[i]) for i in blk), n)
                        for blk in P.blocks]
                yield level_index, P.blocks, max(part_values) / theta


def rho_partition_upper(spec: MixedSpaceSpec, x: FinVec, n: int) -> Fraction:
    """Partition-only upper iterate: level 0 is the l1 norm, each next
    level takes the best admissible covering partition, never worse than
    the previous level.  Always >= the dual norm."""
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    levels = _require_rational(spec, "rho_partition_upper")
    if x.is_zero:
        return Q(0)
    spec_key = spec.cache_key()
    entries = x.abs().entries

    def rec(entries, n):
        key = (spec_key, entries, n)
        got = _RHO_MEMO.get(key)
        if got is not None:
            return got
        if n == 0:
            value = sum((c for _, c in entries), Q(0))
        else:
            value = rec(entries, n - 1)
            for _, _, cand in _admissible_cover_values(levels, entries, n - 1, rec):
                if cand < value:
                    value = cand
        _RHO_MEMO[key] = value
        return value

    return rec(entries, n)


def rho_chain(spec: MixedSpaceSpec, x: FinVec, n_max: int) -> Tuple[RhoIterate, ...]:
    """The iterates 0..n_max as a tuple; handy for tables and checks."""
    return tuple(RhoIterate(n, rho_partition_upper(spec, x, n))
                 for n in range(n_max + 1))


def support_bipartitions(x: FinVec) -> tuple:
    """All unordered splits of x by support, as (y, x - y) pairs.

    The first support point always stays in y, so each split appears
    once; the trivial split (x, 0) is included.
    """
    support = x.support
    if not support:
        return ()
    rest = support[1:]
    out = []
    for r in range(len(rest) + 1):
        for picked in itertools.combinations(rest, r):
            part = (support[0],) + picked
            y = restrict(x, part)
            out.append((y, x - y))
    return tuple(out)


def rho_with_splits_upper(spec: MixedSpaceSpec, x: FinVec, n: int,
                          candidates: Iterable = ()) -> Fraction:
    """The rho iterate with the infimum branch restricted to the given
    decompositions x = w1 + w2 (evaluated at x itself; deeper recursion
    levels see only the partition branch).  An upper bound that can only
    improve as candidates are added; empty candidates reduce it to
    rho_partition_upper."""
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    levels = _require_rational(spec, "rho_with_splits_upper")
    cands = []
    for w1, w2 in candidates:
        if (w1 + w2).entries != x.entries:
            raise TsinormError(
                f"split candidate does not sum to x: {w1.to_dict()} + {w2.to_dict()}")
        cands.append((w1, w2))
    if x.is_zero:
        return Q(0)

    memo: dict = {}

    def rec(y: FinVec, n: int) -> Fraction:
        if y.is_zero:
            return Q(0)
        key = (y.entries, n)
        got = memo.get(key)
        if got is not None:
            return got
        if n == 0:
            value = ell1_norm(y)
        else:
            value = rec(y, n - 1)
            yd = dict(y.entries)
            for _, _, cand in _admissible_cover_values(
                    levels, y.entries, n - 1,
                    lambda ent, m: rec(FinVec.from_items(dict(ent)), m)):
                if cand < value:
                    value = cand
            if y.entries == x.entries:
                for w1, w2 in cands:
                    cand = rec(w1, n - 1) + rec(w2, n - 1)
                    if cand < value:
                        value = cand
        memo[key] = value
        return value

    return rec(x, n)


# ---------------------------------------------------------------------------
# implicit equation

@dataclass(frozen=True)
class BranchEvaluation:
    """One inequality instance: kind "partition" carries (level_index,
    blocks), kind "split" carries (y, z).  slack = value - norm."""
    kind: str
    detail: tuple
    value: Fraction
    slack: Fraction


@dataclass(frozen=True)
class ImplicitEquationReport:
    x: FinVec
    norm: Fraction
    ok: bool
    minimizing: Optional[BranchEvaluation]
    violations: Tuple[BranchEvaluation, ...]
    partition_count: int
    split_count: int


def verify_implicit_equation(spec: MixedSpaceSpec, x: FinVec,
                             budget: int = DEFAULT_NORMING_BUDGET) -> ImplicitEquationReport:
    """Check the fixed-point inequalities of the dual norm at x.

    (a) every admissible covering partition at every level satisfies
    (1/theta) * max_i ||E_i x|| >= ||x||, and (b) every support split
    y + z = x satisfies ||y|| + ||z|| >= ||x||.  Returns the branch of
    least slack (trivial splits excluded, they are always exact) and any
    violations, which a correct build never produces.
    """
    levels = _require_rational(spec, "verify_implicit_equation")
    norm = dual_norm_value(spec, x, budget)
    branches = []
    partition_count = 0
    if not x.is_zero:
        def dv(entries, _n):
            return dual_norm_value(spec, FinVec.from_items(dict(entries)), budget)

        for level_index, blocks, value in _admissible_cover_values(
                levels, x.entries, None, dv):
            partition_count += 1
            branches.append(BranchEvaluation(
                "partition", (level_index, blocks), value, value - norm))

    split_count = 0
    for y, z in support_bipartitions(x):
        value = dual_norm_value(spec, y, budget) + dual_norm_value(spec, z, budget)
        trivial = y.is_zero or z.is_zero
        if not trivial:
            split_count += 1
            branches.append(BranchEvaluation("split", (y, z), value, value - norm))
        elif value < norm:
            branches.append(BranchEvaluation("split", (y, z), value, value - norm))

    violations = tuple(b for b in branches if b.value < norm)
    minimizing = None
    for b in branches:
        if minimizing is None or b.slack < minimizing.slack:
            minimizing = b
    return ImplicitEquationReport(
        x=x, norm=norm, ok=not violations, minimizing=minimizing,
        violations=violations, partition_count=partition_count,
        split_count=split_count)


# ---------------------------------------------------------------------------
# l1-variant falsifier

@dataclass(frozen=True)
class FalsifierWitness:
    x: FinVec
    y: FinVec
    sigma_x: Fraction
    sigma_y: Fraction
    sigma_sum: Fraction


@dataclass(frozen=True)
class FalsifierResult:
    status: str  # "counterexample" or "exhausted"
    pairs_checked: int
    cap_hits: int
    witness: Optional[FalsifierWitness] = None


def sigma_ell1_variant(spec: MixedSpaceSpec, x: FinVec,
                       iteration_cap: int = 32):
    """The l1-variant iterate: the rho recursion with the infimum branch
    replaced by the l1 norm, run to its per-vector fixpoint.

    Returns (value, converged).  Levels are iterated until two agree,
    but never before the support size: a level can stall for one step
    while its blocks still improve underneath.  Blocks converge by
    support-size induction, so the fixpoint arrives by |supp(x)| + 1
    levels; the cap turns larger demands into converged=False instead.
    """
    levels = _require_rational(spec, "sigma_ell1_variant")
    if iteration_cap < 1:
        raise ValueError(f"iteration cap must be >= 1, got {iteration_cap}")
    if x.is_zero:
        return Q(0), True
    spec_key = spec.cache_key()

    def rec(entries, n):
        key = (spec_key, entries, n)
        got = _SIGMA_LEVEL_MEMO.get(key)
        if got is not None:
            return got
        if n == 0:
            value = sum((c for _, c in entries), Q(0))
        else:
            value = rec(entries, n - 1)
            for _, _, cand in _admissible_cover_values(levels, entries, n - 1, rec):
                if cand < value:
                    value = cand
        _SIGMA_LEVEL_MEMO[key] = value
        return value

    entries = x.abs().entries
    need = len(entries)
    prev = rec(entries, 0)
    for n in range(1, iteration_cap + 1):
        cur = rec(entries, n)
        if cur == prev and n > need:
            return cur, True
        prev = cur
    return prev, False


def falsify_ell1_variant(spec: MixedSpaceSpec, N: int, G: Sequence,
                         iteration_cap: int = 32,
                         support_cap: int = 8) -> FalsifierResult:
    """Search for a triangle-inequality failure of the l1 variant.

    Enumerates every nonzero vector with support in [1, N] and entries
    from G, then every unordered pair; addition commutes, so this covers
    the full ordered search and pairs_checked counts each unordered pair
    once.  The first pair with sigma(x + y) > sigma(x) + sigma(y) comes
    back as a witness, re-verified from scratch.  A vector (or pair sum)
    whose sigma iteration hits the cap is skipped and counted as a cap
    hit, never silently trusted.

    Entries are scaled to integers internally (sigma is positively
    homogeneous, so this is only a representation choice for the pair
    loop) and unscaled for every sigma evaluation and in the witness.
    """
    _require_rational(spec, "falsify_ell1_variant")
    if not 1 <= N <= support_cap:
        raise ValueError(f"support bound {N} outside [1, {support_cap}]")
    values = sorted({Q(g) for g in G} - {Q(0)})
    if not values:
        raise ValueError("entry grid is empty")
    denom = 1
    for v in values:
        denom = denom * v.denominator // math.gcd(denom, v.denominator)
    scaled = tuple(sorted(int(v * denom) for v in values))

    def to_vec(dense):
        return FinVec.from_items(
            {i + 1: Q(c, denom) for i, c in enumerate(dense) if c})

    vectors = sorted(
        combo for combo in itertools.product((0,) + scaled, repeat=N)
        if any(combo))

    sigma_of: dict = {}

    def sigma_dense(dense):
        key = tuple(abs(c) for c in dense)
        got = sigma_of.get(key)
        if got is None:
            got = sigma_ell1_variant(spec, to_vec(dense), iteration_cap)
            sigma_of[key] = got
        return got

    usable = []
    cap_hits = 0
    for combo in vectors:
        value, converged = sigma_dense(combo)
        if converged:
            usable.append((combo, value))
        else:
            cap_hits += 1

    pairs_checked = 0
    for a, (xa, sx) in enumerate(usable):
        for yb, sy in usable[a:]:
            total = tuple(p + q for p, q in zip(xa, yb))
            ssum, oks = sigma_dense(total)
            if not oks:
                cap_hits += 1
                continue
            pairs_checked += 1
            if ssum > sx + sy:
                xv, yv = to_vec(xa), to_vec(yb)
                again, converged = sigma_ell1_variant(spec, xv + yv, iteration_cap)
                if not (converged and again == ssum and again - sx - sy > 0):
                    raise TsinormError(
                        "internal consistency failure: falsifier witness "
                        "did not re-verify")
                return FalsifierResult(
                    "counterexample", pairs_checked, cap_hits,
                    FalsifierWitness(xv, yv, sx, sy, ssum))
    return FalsifierResult("exhausted", pairs_checked, cap_hits)


# ---------------------------------------------------------------------------
# certificate documents

def _witness_sexpr(witness) -> str:
    if isinstance(witness, Leaf):
        return f"(leaf {witness.index if witness.index is not None else '-'})"
    blocks = " ".join(
        "(" + " ".join(str(i) for i in blk) + ")" for blk in witness.partition.blocks)
    children = " ".join(_witness_sexpr(c.witness) for c in witness.children)
    return (f"(split {witness.level_index} {format_scalar(witness.theta)} "
            f"({blocks}) {children})")


def _witness_from_sexpr(node, y: FinVec, spec: MixedSpaceSpec) -> PrimalCertificate:
    """Rebuild a primal certificate bottom-up; values are recomputed from
    the ball vector, so a tampered document cannot smuggle them in."""
    if not isinstance(node, list) or not node:
        raise TsinormError(f"bad witness node {node!r}")
    if node[0] == "leaf":
        if len(node) != 2 or isinstance(node[1], list):
            raise TsinormError("leaf witness needs exactly one index")
        if node[1] == "-":
            return PrimalCertificate(Q(0), Leaf(None))
        index = int(node[1])
        return PrimalCertificate(abs(y.coeff(index)), Leaf(index))
    if node[0] != "split" or len(node) < 5:
        raise TsinormError(f"bad witness node {node!r}")
    level_index = int(node[1])
    theta = Q(node[2])
    raw_blocks = node[3]
    if not isinstance(raw_blocks, list) or \
            not all(isinstance(b, list) for b in raw_blocks):
        raise TsinormError("split witness needs a block list")
    blocks = tuple(tuple(int(i) for i in b) for b in raw_blocks)
    children = tuple(_witness_from_sexpr(c, y, spec) for c in node[4:])
    if len(children) != len(blocks):
        raise TsinormError("split witness has mismatched blocks and children")
    try:
        partition = BlockPartition.of(*blocks)
    except ValueError as exc:
        raise TsinormError(f"bad witness partition: {exc}") from None
    value = theta * sum((c.value for c in children), Q(0))
    return PrimalCertificate(value, Split(level_index, theta, partition, children))


def _sexpr_nodes(text: str):
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    def parse(pos):
        if tokens[pos] != "(":
            return tokens[pos], pos + 1
        out = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = parse(pos)
            out.append(item)
        if pos >= len(tokens):
            raise TsinormError("unbalanced parentheses in witness expression")
        return out, pos + 1
    if not tokens:
        raise TsinormError("empty witness expression")
    node, end = parse(0)
    if end != len(tokens):
        raise TsinormError("trailing tokens after witness expression")
    return node


def export_dual_certificate(spec: MixedSpaceSpec, x: FinVec,
                            cert: DualCertificate) -> str:
    """One re-checkable text document: space config, vector, value, hull
    terms as weight-plus-tree lines, ball vector, ball witness tree."""
    lines = [
        "tsinorm-certificate",
        "space: " + json.dumps(spec_to_config(spec)),
        f"vector: {format_vector(x)}",
        f"value: {format_scalar(cert.value)}",
    ]
    for term in cert.hull_terms:
        lines.append(f"hull {format_scalar(term.weight)}: "
                     f"{_functional_sexpr(term.functional.tree)}")
    lines.append(f"ball-vector: {format_vector(cert.ball_vector)}")
    lines.append(f"ball-witness: {_witness_sexpr(cert.ball_certificate.witness)}")
    return "\n".join(lines) + "\n"


def import_dual_certificate(text: str):
    """Parse an exported certificate and re-verify it in full.

    Returns (spec, x, cert) only if the hull arithmetic, the functional
    trees, the ball witness, and the claimed value all check out; any
    defect raises TsinormError.
    """
    space_doc = vector_line = value_line = ball_vec_line = ball_wit_line = None
    hull_lines = []
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "tsinorm-certificate":
        raise TsinormError("not a certificate document (missing magic line)")
    for line in lines[1:]:
        if line.startswith("space: "):
            space_doc = line[len("space: "):]
        elif line.startswith("vector: ") or line == "vector:":
            vector_line = line[len("vector: "):] if line != "vector:" else ""
        elif line.startswith("value: "):
            value_line = line[len("value: "):]
        elif line.startswith("hull "):
            hull_lines.append(line[len("hull "):])
        elif line.startswith("ball-vector: ") or line == "ball-vector:":
            ball_vec_line = line[len("ball-vector: "):] if line != "ball-vector:" else ""
        elif line.startswith("ball-witness: "):
            ball_wit_line = line[len("ball-witness: "):]
        else:
            raise TsinormError(f"unrecognized certificate line {line!r}")
    if space_doc is None or vector_line is None or value_line is None \
            or ball_vec_line is None or ball_wit_line is None:
        raise TsinormError("certificate document is missing required lines")
    try:
        spec = spec_from_config(json.loads(space_doc))
    except ValueError as exc:
        raise TsinormError(f"bad space config in certificate: {exc}") from None
    x = parse_vector(vector_line)
    value = Q(value_line)
    terms = []
    for body in hull_lines:
        weight_text, sep, tree_text = body.partition(": ")
        if not sep:
            raise TsinormError(f"bad hull line {body!r}")
        weight = Q(weight_text)
        tree, pos = _parse_functional_tree(_tokenize_sexpr(tree_text), 0, spec)
        coeffs = FinVec.from_items(_functional_vector(tree))
        terms.append(HullTerm(weight, NormingFunctional(coeffs, tree)))
    y = parse_vector(ball_vec_line)
    ball_cert = _witness_from_sexpr(_sexpr_nodes(ball_wit_line), y, spec)
    cert = DualCertificate(value, tuple(terms), y, ball_cert)
    verify_dual_certificate(spec, x, cert)
    return spec, x, cert
