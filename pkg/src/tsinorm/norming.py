"""Norming sets on a finite index window.

The dual ball of these norms is generated from the signed unit
functionals by bundling: an admissible successive tuple f_1 < ... < f_k
becomes the new functional theta_l * (f_1 + ... + f_k).  On a window
[1, N] the bundling closure over tuples with two or more parts is
finite, so it can be materialised in full, pruned to its coordinatewise
maximal elements, and then evaluated exactly by a scan.

Three structural facts shape the construction:

* Signs factor out.  Flipping leaf signs commutes with bundling over
  disjoint supports, so the closure is run on nonnegative
  representatives and the sign variants are expanded once at the end.
* Single-part bundles never matter.  theta*f is dominated by f, and any
  tree using a one-part node is dominated by the tree with that node
  contracted, so skipping k = 1 leaves the maximal set unchanged (the
  would-be chain theta*f, theta^2*f, ... also never stabilizes).
* Pruning waits for the fixpoint.  A dominated functional can sit in an
  admissible tuple where its wider-supported dominator does not fit, so
  dropping it mid-iteration could lose later combinations.  The loop
  runs the raw closure dry, prunes once, and reports as the generation
  the first round whose maximal set already equals the final one.
"""
from __future__ import annotations

import itertools
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

from .core import (
    DEFAULT_NORMING_BUDGET,
    BlockPartition,
    BudgetExceededError,
    FinVec,
    TsinormError,
    format_scalar,
    pairing,
)
from .families import (
    CardinalityAtMost,
    ExplicitFinite,
    MixedSpaceSpec,
    Schreier1,
    format_theta,
    is_admissible,
    theta_is_rational,
)

Q = Fraction


# ---------------------------------------------------------------------------
# functional trees

@dataclass(frozen=True)
class FunctionalLeaf:
    """A signed unit functional sign * e*_index."""
    index: int
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"leaf sign must be +-1, got {self.sign!r}")
        if not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"leaf index must be a positive integer, got {self.index!r}")


@dataclass(frozen=True)
class FunctionalNode:
    """A bundle theta * (children sum); level_index names the level used."""
    level_index: int
    theta: Fraction
    children: Tuple["FunctionalTree", ...]


FunctionalTree = Union[FunctionalLeaf, FunctionalNode]


@dataclass(frozen=True)
class NormingFunctional:
    """A dual-ball functional: its coordinate vector plus one build tree.

    Several trees can produce the same coordinate vector; only the first
    one constructed is kept.
    """
    coeffs: FinVec
    tree: FunctionalTree

    def __call__(self, x: FinVec) -> Fraction:
        return pairing(self.coeffs, x)


def _tree_vector(tree: FunctionalTree) -> dict:
    if isinstance(tree, FunctionalLeaf):
        return {tree.index: Q(tree.sign)}
    out: dict = {}
    for child in tree.children:
        for i, c in _tree_vector(child).items():
            if i in out:
                raise TsinormError("tree children have overlapping supports")
            out[i] = tree.theta * c
    return out


def _flip_tree(tree: FunctionalTree, signs: dict) -> FunctionalTree:
    if isinstance(tree, FunctionalLeaf):
        return FunctionalLeaf(tree.index, tree.sign * signs.get(tree.index, 1))
    return FunctionalNode(tree.level_index, tree.theta,
                          tuple(_flip_tree(c, signs) for c in tree.children))


def verify_norming_functional(spec: MixedSpaceSpec, f: NormingFunctional,
                              window: Optional[int] = None) -> None:
    """Re-check a functional against its tree; raise TsinormError if bad.

    Checks: the tree recomputes exactly the stored coordinate vector,
    every node uses a level of `spec` with matching rational theta and an
    admissible successive child tuple, and (optionally) the support stays
    inside [1, window].
    """
    def check(tree: FunctionalTree) -> None:
        if isinstance(tree, FunctionalLeaf):
            return
        if not isinstance(tree, FunctionalNode):
            raise TsinormError(f"not a functional tree node: {tree!r}")
        if not 0 <= tree.level_index < len(spec.levels):
            raise TsinormError(f"level index {tree.level_index} out of range")
        level = spec.levels[tree.level_index]
        if not theta_is_rational(level.theta) or Q(level.theta) != tree.theta:
            raise TsinormError(
                f"node weight {tree.theta} does not match level {tree.level_index}")
        if not tree.children:
            raise TsinormError("node without children")
        supports = []
        for child in tree.children:
            vec = _tree_vector(child)
            supports.append(tuple(sorted(vec)))
        try:
            P = BlockPartition(tuple(supports))
        except ValueError as exc:
            raise TsinormError(f"children are not successive: {exc}") from None
        if not is_admissible(level.family, P):
            raise TsinormError(
                f"child supports {supports} are not admissible for level {tree.level_index}")
        for child in tree.children:
            check(child)

    check(f.tree)
    recomputed = FinVec.from_items(_tree_vector(f.tree))
    if recomputed.entries != f.coeffs.entries:
        raise TsinormError("tree does not recompute the stored coefficients")
    if window is not None:
        support = f.coeffs.support
        if support and support[-1] > window:
            raise TsinormError(
                f"functional support {support} leaves the window [1, {window}]")


# ---------------------------------------------------------------------------
# norming sets

@dataclass(frozen=True)
class NormingSet:
    """An immutable batch of norming functionals over the window [1, N].

    `generation` is the first closure round whose maximal set already
    equals the final one; `stabilized` records whether the construction
    actually ran to that fixpoint (the literal generation-n sets exported
    by raw_norming_generation leave it False when truncated).
    """
    spec: MixedSpaceSpec
    window: int
    functionals: Tuple[NormingFunctional, ...]
    generation: int
    stabilized: bool

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window bound must be >= 1, got {self.window}")
        if not self.functionals:
            raise ValueError("a norming set needs at least one functional")
        # Group by absolute coefficient pattern.  When every group holds all
        # 2^s sign flips, evaluation may pair |x| with the nonnegative
        # representatives only (the best sign pattern always exists).
        groups: dict = {}
        for f in self.functionals:
            key = f.coeffs.abs().entries
            groups.setdefault(key, set()).add(f.coeffs.entries)
        complete = all(len(v) == 2 ** len(k) for k, v in groups.items())
        reps = tuple(FinVec.from_items(dict(k)) for k in sorted(groups))
        object.__setattr__(self, "_abs_reps", reps)
        object.__setattr__(self, "_sign_complete", complete)

    @property
    def cardinality(self) -> int:
        return len(self.functionals)


def tau(vset: NormingSet, x: FinVec) -> Fraction:
    """max f(x) over the stored functionals; supp(x) must fit the window."""
    support = x.support
    if support and support[-1] > vset.window:
        raise TsinormError(
            f"support {support} outside window [1, {vset.window}]")
    if vset._sign_complete:
        xa = x.abs()
        return max(pairing(rep, xa) for rep in vset._abs_reps)
    return max(pairing(f.coeffs, x) for f in vset.functionals)


# ---------------------------------------------------------------------------
# closure construction

def _rational_levels(spec: MixedSpaceSpec) -> tuple:
    if spec.has_symbolic_theta:
        raise TsinormError(
            "norming sets need rational weights at every level; "
            f"space {spec.name!r} has a symbolic one")
    return tuple((i, lev.family, Q(lev.theta)) for i, lev in enumerate(spec.levels))


def _k_cap(levels: tuple, first_min: int) -> int:
    """Upper bound on the part count of any admissible tuple whose first
    part has minimum first_min.  Only a pruning bound; admissibility is
    re-checked exactly on emission."""
    cap = 1
    for _, family, _ in levels:
        if isinstance(family, Schreier1):
            c = first_min
        elif isinstance(family, CardinalityAtMost):
            c = family.n
        elif isinstance(family, ExplicitFinite):
            c = max((len(M) for M in family.sets if M[0] <= first_min), default=0)
        else:
            raise TypeError(f"unknown family {family!r}")
        cap = max(cap, c)
    return cap


def _closure(spec: MixedSpaceSpec, indices: tuple, budget: int,
             include_singletons: bool, max_rounds: Optional[int]):
    """Bundling closure over nonnegative representatives.

    `indices` is the strictly increasing tuple of coordinates to seed
    from; admissibility only ever looks at actual supports, so closing
    over a sub-index-set gives exactly the functionals of the full-window
    closure whose support lies inside it.

    Returns (F, snapshots, reached_fixpoint): F maps coefficient entry
    tuples to their first-constructed tree, snapshots[n] is the key set
    after n rounds.  Rounds are semi-naive: a tuple is only combined when
    at least one part is new since the previous round.
    """
    levels = _rational_levels(spec)
    if not indices:
        raise ValueError("need at least one index to seed from")
    F: dict = {}
    for i in indices:
        F[((i, Q(1)),)] = FunctionalLeaf(i, 1)
    if len(F) > budget:
        raise BudgetExceededError(
            f"seeding {len(F)} unit functionals already exceeds budget {budget}")
    snapshots = [frozenset(F)]
    frontier = frozenset(F)
    cap_cache: dict = {}
    rounds = 0
    min_emit = 1 if include_singletons else 2

    while frontier and (max_rounds is None or rounds < max_rounds):
        listing = sorted(F)
        minima = [key[0][0] for key in listing]
        trees = dict(F)
        new: dict = {}

        def emit(parts, has_frontier):
            if not has_frontier:
                return
            supports = tuple(tuple(i for i, _ in key) for key in parts)
            P = BlockPartition(supports)
            for level_index, family, theta in levels:
                if not is_admissible(family, P):
                    continue
                ckey = tuple((i, theta * c) for key in parts for i, c in key)
                if ckey in F or ckey in new:
                    continue
                new[ckey] = FunctionalNode(
                    level_index, theta, tuple(trees[key] for key in parts))
                if len(F) + len(new) > budget:
                    raise BudgetExceededError(
                        f"norming closure exceeds the budget of {budget} functionals")

        def extend(parts, last_max, has_frontier):
            k = len(parts)
            if k >= min_emit:
                emit(parts, has_frontier)
            if parts:
                first_min = parts[0][0][0]
                cap = cap_cache.get(first_min)
                if cap is None:
                    cap = _k_cap(levels, first_min)
                    cap_cache[first_min] = cap
                if k >= cap:
                    return
            for pos in range(bisect_right(minima, last_max), len(listing)):
                key = listing[pos]
                extend(parts + [key], key[-1][0],
                       has_frontier or key in frontier)

        extend([], 0, False)
        if not new:
            frontier = frozenset()
            break
        F.update(new)
        snapshots.append(frozenset(F))
        frontier = frozenset(new)
        rounds += 1

    return F, snapshots, not frontier


def _maximal_keys(keys) -> frozenset:
    """Keys not coordinatewise dominated by a distinct key (all nonneg)."""
    pool = [(key, dict(key)) for key in keys]
    out = []
    for key, kd in pool:
        dominated = False
        for other, od in pool:
            if other is key or len(other) < len(key):
                continue
            if other != key and all(od.get(i, Q(0)) >= c for i, c in kd.items()):
                dominated = True
                break
        if not dominated:
            out.append(key)
    return frozenset(out)


def _expand_signs(F: dict, keys, budget: int, context: str):
    total = sum(2 ** len(key) for key in keys)
    if total > budget:
        raise BudgetExceededError(
            f"{context}: sign expansion needs {total} functionals, budget {budget}")
    funcs = []
    for key in sorted(keys):
        indices = [i for i, _ in key]
        tree = F[key]
        for pattern in itertools.product((1, -1), repeat=len(indices)):
            signs = dict(zip(indices, pattern))
            coeffs = FinVec.from_items({i: s * c for (i, c), s in zip(key, pattern)})
            funcs.append(NormingFunctional(coeffs, _flip_tree(tree, signs)))
    funcs.sort(key=lambda f: f.coeffs.entries)
    return tuple(funcs)


def build_norming_set(spec: MixedSpaceSpec, N: int,
                      budget: int = DEFAULT_NORMING_BUDGET) -> NormingSet:
    """Stabilized set of maximal functionals supported in [1, N].

    Runs the two-or-more-part bundling closure to its fixpoint, prunes
    everything coordinatewise absolutely dominated, and sign-expands the
    surviving patterns.  Requires rational weights on every level.
    Exceeding `budget` materialised functionals raises
    BudgetExceededError rather than truncating.
    """
    if N < 1:
        raise ValueError(f"window bound must be >= 1, got {N}")
    F, snapshots, _ = _closure(spec, tuple(range(1, N + 1)), budget,
                               include_singletons=False, max_rounds=None)
    final_maximal = _maximal_keys(F)
    generation = 0
    for n, snap in enumerate(snapshots):
        if _maximal_keys(snap) == final_maximal:
            generation = n
            break
    funcs = _expand_signs(F, final_maximal, budget,
                          f"norming set on window [1, {N}]")
    return NormingSet(spec, N, funcs, generation, stabilized=True)


def norming_generators(spec: MixedSpaceSpec, indices,
                       budget: int = DEFAULT_NORMING_BUDGET):
    """Maximal signed functionals whose support lies inside `indices`.

    Same construction as build_norming_set, seeded from an arbitrary
    strictly increasing index tuple instead of a full window.  This is
    what the dual-norm gauge programs consume: functionals supported
    outside supp(x) pair trivially with x, and filtering them is the same
    as closing over supp(x) directly.
    """
    indices = tuple(indices)
    if any(indices[i] >= indices[i + 1] for i in range(len(indices) - 1)):
        raise ValueError("indices must be strictly increasing")
    F, _, _ = _closure(spec, indices, budget, include_singletons=False,
                       max_rounds=None)
    return _expand_signs(F, _maximal_keys(F), budget,
                         f"norming generators on {list(indices)}")


def raw_norming_generation(spec: MixedSpaceSpec, N: int, generations: int,
                           budget: int = DEFAULT_NORMING_BUDGET) -> NormingSet:
    """The literal generation-n set: `generations` closure rounds from the
    signed units, one-part bundles included, nothing pruned.

    Mostly a diagnostic surface: evaluating against it reproduces the
    level-n approximation of the norm, and comparing it with the pruned
    set exhibits the pruning soundness property.
    """
    if generations < 0:
        raise ValueError(f"generation count must be >= 0, got {generations}")
    if N < 1:
        raise ValueError(f"window bound must be >= 1, got {N}")
    F, snapshots, fixpoint = _closure(spec, tuple(range(1, N + 1)), budget,
                                      include_singletons=True,
                                      max_rounds=generations)
    funcs = _expand_signs(F, F.keys(), budget,
                          f"raw generation {generations} on window [1, {N}]")
    return NormingSet(spec, N, funcs, generation=len(snapshots) - 1,
                      stabilized=fixpoint)


# ---------------------------------------------------------------------------
# export / import

def _tree_sexpr(tree: FunctionalTree) -> str:
    if isinstance(tree, FunctionalLeaf):
        return f"e{tree.index}" if tree.sign > 0 else f"-e{tree.index}"
    inner = " ".join(_tree_sexpr(c) for c in tree.children)
    return f"({format_scalar(tree.theta)} {inner})"


def _format_vector_entries(x: FinVec) -> str:
    return " ".join(f"{i}:{format_scalar(c)}" for i, c in x.entries)


def export_norming_set(vset: NormingSet) -> str:
    """Serialize: metadata header lines, then one functional per line as
    `theta-tree s-expression <TAB> coefficient vector literal`."""
    lines = [
        f"# norming-set space={vset.spec.name} window={vset.window} "
        f"generation={vset.generation} stabilized={str(vset.stabilized).lower()} "
        f"count={len(vset.functionals)}",
    ]
    for i, lev in enumerate(vset.spec.levels):
        lines.append(f"# level {i}: {lev.family} theta={format_theta(lev.theta)}")
    for f in vset.functionals:
        lines.append(f"{_tree_sexpr(f.tree)}\t{_format_vector_entries(f.coeffs)}")
    return "\n".join(lines) + "\n"


def _tokenize_sexpr(text: str) -> list:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_tree(tokens: list, pos: int, spec: MixedSpaceSpec):
    """Parse one tree from tokens[pos:]; returns (tree, next_pos).

    Node weights are matched back to the first level of `spec` with the
    same rational theta whose family admits the children's supports.
    """
    if pos >= len(tokens):
        raise TsinormError("unexpected end of functional expression")
    tok = tokens[pos]
    if tok == "(":
        pos += 1
        if pos >= len(tokens):
            raise TsinormError("unexpected end of functional expression")
        try:
            theta = Q(tokens[pos])
        except (ValueError, ZeroDivisionError):
            raise TsinormError(f"bad node weight {tokens[pos]!r}") from None
        pos += 1
        children = []
        while pos < len(tokens) and tokens[pos] != ")":
            child, pos = _parse_tree(tokens, pos, spec)
            children.append(child)
        if pos >= len(tokens):
            raise TsinormError("unbalanced parentheses in functional expression")
        pos += 1
        if not children:
            raise TsinormError("node without children")
        supports = []
        for child in children:
            supports.append(tuple(sorted(_tree_vector(child))))
        try:
            P = BlockPartition(tuple(supports))
        except ValueError as exc:
            raise TsinormError(f"children are not successive: {exc}") from None
        level_index = None
        for i, lev in enumerate(spec.levels):
            if theta_is_rational(lev.theta) and Q(lev.theta) == theta \
                    and is_admissible(lev.family, P):
                level_index = i
                break
        if level_index is None:
            raise TsinormError(
                f"no level of space {spec.name!r} has weight {theta} and "
                f"admits child supports {supports}")
        return FunctionalNode(level_index, theta, tuple(children)), pos
    if tok == ")":
        raise TsinormError("unbalanced parentheses in functional expression")
    sign = 1
    if tok.startswith("-"):
        sign, tok = -1, tok[1:]
    if not tok.startswith("e") or not tok[1:].isdigit():
        raise TsinormError(f"bad leaf token {tok!r}: expected e<index>")
    index = int(tok[1:])
    if index < 1:
        raise TsinormError(f"leaf index {index} out of range: must be >= 1")
    return FunctionalLeaf(index, sign), pos + 1


def _parse_vector_literal(text: str) -> FinVec:
    entries = {}
    for token in text.split():
        head, sep, tail = token.partition(":")
        if not sep:
            raise TsinormError(f"bad vector token {token!r}: expected index:value")
        try:
            idx, val = int(head), Q(tail)
        except (ValueError, ZeroDivisionError):
            raise TsinormError(f"bad vector token {token!r}") from None
        if idx in entries:
            raise TsinormError(f"duplicate index {idx} in vector literal")
        entries[idx] = val
    return FinVec.from_items(entries)


def import_norming_set(text: str, spec: MixedSpaceSpec) -> NormingSet:
    """Parse an export and re-verify every functional against `spec`.

    Each line's tree must recompute its vector column exactly, with
    admissible successive children at every node, supports inside the
    window, and no duplicate coefficient vectors.
    """
    window = generation = None
    stabilized = False
    count = None
    level_lines = []
    funcs = []
    seen = set()
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("norming-set"):
                for field in body.split()[1:]:
                    key, _, value = field.partition("=")
                    if key == "window":
                        window = int(value)
                    elif key == "generation":
                        generation = int(value)
                    elif key == "stabilized":
                        stabilized = value == "true"
                    elif key == "count":
                        count = int(value)
            elif body.startswith("level"):
                level_lines.append(body)
            continue
        expr, sep, vec_text = line.partition("\t")
        if not sep:
            raise TsinormError(
                f"bad functional line {line!r}: expected tree<TAB>vector")
        tokens = _tokenize_sexpr(expr)
        tree, pos = _parse_tree(tokens, 0, spec)
        if pos != len(tokens):
            raise TsinormError(f"trailing tokens in functional expression {expr!r}")
        coeffs = _parse_vector_literal(vec_text)
        f = NormingFunctional(coeffs, tree)
        funcs.append(f)

    if window is None or generation is None:
        raise TsinormError("missing norming-set metadata header")
    expected_levels = [f"level {i}: {lev.family} theta={format_theta(lev.theta)}"
                       for i, lev in enumerate(spec.levels)]
    if level_lines != expected_levels:
        raise TsinormError(
            f"export level metadata {level_lines!r} does not match space {spec.name!r}")
    if count is not None and count != len(funcs):
        raise TsinormError(
            f"header count {count} does not match {len(funcs)} functional lines")
    for f in funcs:
        verify_norming_functional(spec, f, window=window)
        if f.coeffs.entries in seen:
            raise TsinormError(
                f"duplicate functional {_format_vector_entries(f.coeffs)!r}")
        seen.add(f.coeffs.entries)
    return NormingSet(spec, window, tuple(funcs), generation, stabilized)
