"""Rough-set engine over symbolic decision tables.

Indiscernibility partitions, lower/upper approximations, discernibility
matrices and reducts, rule induction with dependency factors, and rule-based
classification with an explicit "unrecognized" outcome.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .data import UNRECOGNIZED, DecisionTable
from .errors import InductionError, MeasureError, ShapeError, UnknownAttributeError

WHOLE = "whole"
COVERED = "covered"
STRATEGIES = ("minimal", "exhaustive", "strong")


# -- partitions and approximations ------------------------------------------

def _columns(table, attrs):
    idx = []
    for a in attrs:
        idx.append(table.index(a))
    return idx


def _check_conditions(table, attrs):
    attrs = tuple(attrs)
    conds = set(table.condition_names)
    for a in attrs:
        if a not in conds:
            raise UnknownAttributeError(f"{a!r} is not a condition attribute")
    return attrs


def _partition(table, attrs):
    """Classes as lists of row indices, in order of first appearance."""
    idx = _columns(table, attrs)
    blocks = {}
    for i, row in enumerate(table.rows):
        blocks.setdefault(tuple(row[j] for j in idx), []).append(i)
    return list(blocks.values())


def indiscernibility_classes(table: DecisionTable, attrs: Iterable[str]) -> list[frozenset]:
    attrs = _check_conditions(table, attrs)
    ids = table.object_ids
    return [frozenset(ids[i] for i in block) for block in _partition(table, attrs)]


def lower_approximation(table: DecisionTable, attrs, target) -> frozenset:
    target = frozenset(target)
    return frozenset().union(*(c for c in indiscernibility_classes(table, attrs) if c <= target))


def upper_approximation(table: DecisionTable, attrs, target) -> frozenset:
    target = frozenset(target)
    return frozenset().union(*(c for c in indiscernibility_classes(table, attrs) if c & target))


def _decision_index(table):
    name = table.decision_name
    if name is None:
        raise InductionError("table has no decision attribute")
    return table.index(name)


def positive_region(table: DecisionTable, attrs, merged: frozenset = frozenset()) -> frozenset:
    """Objects whose attrs-class lies inside one decision class.

    Decision values listed in `merged` count as a single class.
    """
    attrs = _check_conditions(table, attrs)
    dj = _decision_index(table)

    def label(v):
        return "__merged__" if v in merged else ("v", v)

    pos = set()
    for block in _partition(table, attrs):
        if len({label(table.rows[i][dj]) for i in block}) == 1:
            pos.update(table.object_ids[i] for i in block)
    return frozenset(pos)


def is_consistent(table: DecisionTable) -> bool:
    return len(positive_region(table, table.condition_names)) == len(table)


# -- discernibility and reducts -----------------------------------------------

@dataclass(frozen=True)
class DiscernibilityMatrix:
    """Lower triangle of attribute sets that tell objects i > j apart."""

    object_ids: tuple
    attributes: tuple[str, ...]
    entries: Mapping[tuple[int, int], frozenset] = field(repr=False)

    def __len__(self):
        return len(self.object_ids)

    def entry(self, i: int, j: int) -> frozenset:
        if i == j:
            return frozenset()
        return self.entries[(i, j)] if i > j else self.entries[(j, i)]

    def clauses(self) -> list[frozenset]:
        """Distinct nonempty entries: the conjuncts of the discernibility function."""
        seen = dict.fromkeys(e for e in self.entries.values() if e)
        return list(seen)


def discernibility_matrix(table: DecisionTable, attrs: Sequence[str] | None = None) -> DiscernibilityMatrix:
    attrs = tuple(table.condition_names if attrs is None else _check_conditions(table, attrs))
    idx = _columns(table, attrs)
    rows = [tuple(r[j] for j in idx) for r in table.rows]
    entries = {}
    for i in range(len(rows)):
        for j in range(i):
            entries[(i, j)] = frozenset(a for a, u, v in zip(attrs, rows[i], rows[j]) if u != v)
    return DiscernibilityMatrix(table.object_ids, attrs, entries)


def _absorb(sets):
    """Keep only the inclusion-minimal sets."""
    out = []
    for s in sorted(set(sets), key=lambda s: (len(s), sorted(map(str, s)))):
        if not any(t <= s for t in out):
            out.append(s)
    return out


def prime_implicants(clauses: Iterable[frozenset]) -> list[frozenset]:
    """Minimal attribute sets meeting every clause of a monotone CNF."""
    clauses = _absorb(frozenset(c) for c in clauses)
    if any(not c for c in clauses):
        return []
    implicants = [frozenset()]
    for clause in clauses:
        grown = []
        for imp in implicants:
            if imp & clause:
                grown.append(imp)
            else:
                grown.extend(imp | {a} for a in clause)
        implicants = _absorb(grown)
    return implicants


def _greedy_hitting_set(clauses, order):
    clauses = [c for c in _absorb(clauses)]
    chosen = set()
    open_ = list(clauses)
    while open_:
        freq = Counter(a for c in open_ for a in c)
        best = max(freq, key=lambda a: (freq[a], -order.index(a)))
        chosen.add(best)
        open_ = [c for c in open_ if best not in c]
    for a in sorted(chosen, key=order.index, reverse=True):
        if all((chosen - {a}) & c for c in clauses):
            chosen.discard(a)
    return frozenset(chosen)


@dataclass(frozen=True)
class ReductSet:
    reducts: tuple[frozenset, ...]
    heuristic: bool = False
    degenerate: bool = False

    def __iter__(self):
        return iter(self.reducts)

    def __len__(self):
        return len(self.reducts)

    def __contains__(self, item):
        return frozenset(item) in self.reducts


def reducts(matrix: DiscernibilityMatrix, exact_bound: int = 12) -> ReductSet:
    """All reducts for small universes, else one greedily minimized superreduct."""
    clauses = matrix.clauses()
    if not clauses:
        return ReductSet((frozenset(),), degenerate=True)
    order = list(matrix.attributes)

    def key(s):
        return (len(s), sorted(order.index(a) for a in s))

    if len(matrix) <= exact_bound:
        return ReductSet(tuple(sorted(prime_implicants(clauses), key=key)))
    return ReductSet((_greedy_hitting_set(clauses, order),), heuristic=True)


# -- rules -----------------------------------------------------------------------

@dataclass(frozen=True)
class RoughRule:
    """Conjunction of (attribute, allowed values) descriptors implying a decision set."""

    conditions: tuple[tuple[str, frozenset], ...]
    decisions: frozenset
    dependency_factor: float = 0.0
    support: int = 0

    def __post_init__(self):
        object.__setattr__(self, "conditions",
                           tuple((a, frozenset(v)) for a, v in self.conditions))
        object.__setattr__(self, "decisions", frozenset(self.decisions))
        if not self.decisions:
            raise InductionError("a rule needs at least one decision value")

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.conditions)

    @property
    def exact(self) -> bool:
        return len(self.decisions) == 1

    def matches(self, obj: Mapping) -> bool:
        try:
            return all(obj[a] in values for a, values in self.conditions)
        except KeyError as exc:
            raise ShapeError(f"object lacks attribute {exc}") from None

    def _key(self):
        return (self.attributes, tuple(tuple(sorted(v, key=_sort_key)) for _, v in self.conditions),
                tuple(sorted(self.decisions, key=_sort_key)))


def _sort_key(v):
    if isinstance(v, (int, float)):
        return (0, float(v), "")
    return (1, 0.0, str(v))


@dataclass(frozen=True)
class RoughRuleSet:
    rules: tuple[RoughRule, ...]
    decision_name: str
    strategy: str = "minimal"
    fallback_code: object = 4

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.strategy not in STRATEGIES:
            raise InductionError(f"unknown strategy {self.strategy!r}")

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


def _rows_as_dicts(table):
    names = table.names
    return [dict(zip(names, r)) for r in table.rows]


def dependency_factor(table: DecisionTable, rule: RoughRule, universe: str = WHOLE) -> float:
    """Strength of a rule on a table.

    The positive region is taken over the rule's condition attributes, with
    the rule's decision values treated as one class. Under the "whole"
    reading it is divided by the table size; under "covered" the numerator
    and denominator are both restricted to objects the rule matches. A rule
    matching no object has strength 0.
    """
    if len(table) == 0:
        raise MeasureError("dependency factor over an empty universe")
    _check_conditions(table, rule.attributes)
    objs = _rows_as_dicts(table)
    covered = {table.object_ids[i] for i, o in enumerate(objs) if rule.matches(o)}
    if not covered:
        return 0.0
    merged = rule.decisions if len(rule.decisions) > 1 else frozenset()
    pos = positive_region(table, rule.attributes, merged)
    if universe == WHOLE:
        return len(pos) / len(table)
    if universe == COVERED:
        return len(pos & covered) / len(covered)
    raise ValueError(f"unknown universe reading {universe!r}")


def _generalized_decisions(table):
    dj = _decision_index(table)
    gd = [None] * len(table)
    for block in _partition(table, table.condition_names):
        values = frozenset(table.rows[i][dj] for i in block)
        for i in block:
            gd[i] = values
    return gd


def _object_rules(table):
    """Rules from every object's local reducts (decision-relative, generalized decisions)."""
    conds = table.condition_names
    cidx = _columns(table, conds)
    gd = _generalized_decisions(table)
    rules = {}
    for i, row in enumerate(table.rows):
        clauses = []
        for j, other in enumerate(table.rows):
            if gd[j] != gd[i]:
                clauses.append(frozenset(a for a, k in zip(conds, cidx) if row[k] != other[k]))
        for imp in prime_implicants(clauses):
            descriptors = tuple((a, frozenset([row[k]])) for a, k in zip(conds, cidx) if a in imp)
            r = RoughRule(descriptors, gd[i])
            rules.setdefault(r._key(), r)
    return list(rules.values())


def _merge_value_sets(rules, attr_order):
    """Fuse rules that differ only in the value set of one attribute."""
    rules = sorted(rules, key=lambda r: r._key())
    changed = True
    while changed:
        changed = False
        for a in attr_order:
            groups = {}
            for r in rules:
                if a not in r.attributes:
                    groups[("keep", r._key())] = [r]
                    continue
                rest = tuple((b, v) for b, v in r.conditions if b != a)
                groups.setdefault((r.attributes, rest, r.decisions), []).append(r)
            merged = []
            for key, members in groups.items():
                if len(members) == 1:
                    merged.append(members[0])
                    continue
                values = frozenset().union(*(dict(m.conditions)[a] for m in members))
                first = members[0]
                conds = tuple((b, values if b == a else v) for b, v in first.conditions)
                merged.append(RoughRule(conds, first.decisions))
                changed = True
            rules = sorted(merged, key=lambda r: r._key())
    return rules


def _annotate(table, rules, universe):
    objs = _rows_as_dicts(table)
    return [replace(r, dependency_factor=dependency_factor(table, r, universe),
                    support=sum(1 for o in objs if r.matches(o))) for r in rules]


def induce_rules(table: DecisionTable, strategy: str = "minimal", exact_only: bool = True,
                 strength_threshold: float = 0.0, merge_values: bool = True,
                 universe: str = WHOLE, fallback_code=4) -> RoughRuleSet:
    """Decision rules from a symbolic table.

    Candidate rules come from each object's minimal discerning attribute
    sets against objects with a different generalized decision; an object
    in an inconsistent class yields a rule with several decisions, dropped
    when `exact_only`. "exhaustive" keeps all candidates, "minimal" keeps a
    greedy cover of every coverable object, "strong" keeps candidates whose
    dependency factor reaches `strength_threshold`.
    """
    if strategy not in STRATEGIES:
        raise InductionError(f"unknown strategy {strategy!r}")
    if len(table) == 0:
        raise InductionError("cannot induce rules from an empty table")
    _decision_index(table)
    candidates = _object_rules(table)
    if exact_only:
        candidates = [r for r in candidates if r.exact]
    if merge_values:
        candidates = _merge_value_sets(candidates, table.condition_names)
    candidates = _annotate(table, candidates, universe)

    if strategy == "strong":
        chosen = [r for r in candidates if r.dependency_factor >= strength_threshold]
    elif strategy == "exhaustive":
        chosen = candidates
    else:
        chosen = _greedy_cover(table, candidates)
    return RoughRuleSet(tuple(chosen), table.decision_name, strategy, fallback_code)


def _greedy_cover(table, candidates):
    objs = _rows_as_dicts(table)
    covers = [frozenset(i for i, o in enumerate(objs) if r.matches(o)) for r in candidates]
    uncovered = set().union(*covers) if covers else set()
    chosen = []
    remaining = list(range(len(candidates)))
    while uncovered:
        best = max(remaining, key=lambda k: (len(covers[k] & uncovered),
                                             candidates[k].dependency_factor,
                                             -len(candidates[k].conditions),
                                             -remaining.index(k)))
        chosen.append(candidates[best])
        uncovered -= covers[best]
        remaining.remove(best)
    return chosen


# -- classification ----------------------------------------------------------------

def ordered_rules(rules: RoughRuleSet, tie_policy: str = "df") -> list[RoughRule]:
    """Rule priority: highest df, then fewest conditions, then attribute names."""
    indexed = list(enumerate(rules.rules))
    if tie_policy == "df":
        indexed.sort(key=lambda p: (-p[1].dependency_factor, len(p[1].conditions),
                                    p[1].attributes, p[0]))
    elif tie_policy != "given":
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    return [r for _, r in indexed]


def classify(rules: RoughRuleSet, obj: Mapping, tie_policy: str = "df"):
    """Decision of the first matching rule (lowest value of a decision set), else UNRECOGNIZED."""
    for rule in ordered_rules(rules, tie_policy):
        if rule.matches(obj):
            return min(rule.decisions, key=_sort_key)
    return UNRECOGNIZED


def classify_code(rules: RoughRuleSet, obj: Mapping, tie_policy: str = "df"):
    """Like classify, but report an unrecognized object as the rule set's fallback code."""
    d = classify(rules, obj, tie_policy)
    return rules.fallback_code if d is UNRECOGNIZED else d


def classify_table(rules: RoughRuleSet, table: DecisionTable, tie_policy: str = "df") -> list:
    ordered = ordered_rules(rules, tie_policy)
    out = []
    for obj in _rows_as_dicts(table):
        for rule in ordered:
            if rule.matches(obj):
                out.append(min(rule.decisions, key=_sort_key))
                break
        else:
            out.append(UNRECOGNIZED)
    return out


# -- text and structured export -------------------------------------------------

def _fmt_value(v):
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def format_rule(rule: RoughRule, decision_label: str = "Dec") -> str:
    parts = []
    for a, values in rule.conditions:
        vals = sorted(values, key=_sort_key)
        if len(vals) == 1:
            parts.append(f"({a} = {_fmt_value(vals[0])})")
        else:
            parts.append(f"({a} in {{{', '.join(_fmt_value(v) for v in vals)}}})")
    lhs = " & ".join(parts) if parts else "TRUE"
    rhs = " OR ".join(f"({decision_label} = {_fmt_value(d)})"
                      for d in sorted(rule.decisions, key=_sort_key))
    return f"{lhs} ⇒ {rhs};"


def format_rules(rules: RoughRuleSet, decision_label: str = "Dec", numbered: bool = True) -> str:
    lines = []
    for k, r in enumerate(rules.rules, 1):
        text = format_rule(r, decision_label)
        lines.append(f"{k}\t{text}" if numbered else text)
    return "\n".join(lines) + ("\n" if lines else "")


_DESC = re.compile(r"\(\s*([^()=\s]+)\s*(=|in)\s*(\{[^}]*\}|[^()]+?)\s*\)")


def _parse_value(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_rule(line: str) -> RoughRule:
    """Inverse of format_rule (numbering prefix allowed; df and support are not carried)."""
    line = line.strip().rstrip(";")
    line = re.sub(r"^\d+\s+", "", line)
    if "⇒" in line:
        lhs, rhs = line.split("⇒", 1)
    else:
        lhs, rhs = line.split("=>", 1)
    conds = []
    if lhs.strip() != "TRUE":
        for a, op, val in _DESC.findall(lhs):
            if op == "in":
                values = frozenset(_parse_value(v) for v in val.strip("{}").split(","))
            else:
                values = frozenset([_parse_value(val)])
            conds.append((a, values))
    decisions = frozenset(_parse_value(v) for _, _, v in _DESC.findall(rhs))
    return RoughRule(tuple(conds), decisions)


def rules_to_dict(rules: RoughRuleSet) -> dict:
    return {
        "kind": "rough-rules",
        "decision": rules.decision_name,
        "strategy": rules.strategy,
        "fallback_code": rules.fallback_code,
        "rules": [
            {"conditions": [[a, sorted(v, key=_sort_key)] for a, v in r.conditions],
             "decisions": sorted(r.decisions, key=_sort_key),
             "dependency_factor": r.dependency_factor,
             "support": r.support}
            for r in rules.rules
        ],
    }


def rules_from_dict(d: dict) -> RoughRuleSet:
    if d.get("kind") != "rough-rules":
        raise ShapeError("not a rough-rules document")
    rules = tuple(RoughRule(tuple((a, frozenset(v)) for a, v in r["conditions"]),
                            frozenset(r["decisions"]), float(r["dependency_factor"]),
                            int(r["support"])) for r in d["rules"])
    return RoughRuleSet(rules, d["decision"], d["strategy"], d["fallback_code"])


def dump_rules(rules: RoughRuleSet) -> str:
    return json.dumps(rules_to_dict(rules), indent=1) + "\n"


def load_rules(text: str) -> RoughRuleSet:
    return rules_from_dict(json.loads(text))
