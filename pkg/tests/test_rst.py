import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import as_dicts, random_rows, symbolic_table
import oracles
from softgran import rst
from softgran.data import UNRECOGNIZED
from softgran.errors import InductionError, MeasureError, UnknownAttributeError


def ids_to_idx(table, ids):
    return {table.object_ids.index(o) for o in ids}


# -- partitions --------------------------------------------------------------------

def test_empty_attribute_set_gives_one_class():
    t = symbolic_table("ab", [(1, 2, 1), (1, 3, 2), (2, 2, 1)])
    assert rst.indiscernibility_classes(t, []) == [frozenset({"x1", "x2", "x3"})]


def test_classes_small_example():
    t = symbolic_table("ab", [(1, 2, 1), (1, 2, 1), (2, 2, 1)])
    got = set(rst.indiscernibility_classes(t, "ab"))
    assert got == {frozenset({"x1", "x2"}), frozenset({"x3"})}


def test_classes_all_distinct():
    t = symbolic_table("ab", [(1, 1, 1), (2, 1, 1), (3, 1, 1)])
    assert all(len(c) == 1 for c in rst.indiscernibility_classes(t, "a"))


def test_unknown_attribute():
    t = symbolic_table("ab", [(1, 1, 1)])
    with pytest.raises(UnknownAttributeError):
        rst.indiscernibility_classes(t, ["q"])
    with pytest.raises(KeyError):
        rst.indiscernibility_classes(t, ["q"])


# -- approximations ----------------------------------------------------------------

STRADDLE = symbolic_table("a", [(1, 1), (1, 2), (2, 1), (3, 2)])


def test_lower_upper_definable():
    x = {"x1", "x2", "x3"}
    assert rst.lower_approximation(STRADDLE, "a", x) == x
    assert rst.upper_approximation(STRADDLE, "a", x) == x


def test_lower_upper_empty_and_universe():
    u = set(STRADDLE.object_ids)
    assert rst.lower_approximation(STRADDLE, "a", set()) == set()
    assert rst.upper_approximation(STRADDLE, "a", u) == u


def test_straddling_class():
    x = {"x1", "x3"}
    assert rst.lower_approximation(STRADDLE, "a", x) == {"x3"}
    assert rst.upper_approximation(STRADDLE, "a", x) == {"x1", "x2", "x3"}
    rows = as_dicts(STRADDLE)
    assert ids_to_idx(STRADDLE, rst.lower_approximation(STRADDLE, "a", x)) == oracles.lower(rows, "a", {0, 2})
    assert ids_to_idx(STRADDLE, rst.upper_approximation(STRADDLE, "a", x)) == oracles.upper(rows, "a", {0, 2})


# -- discernibility and reducts -------------------------------------------------------

def test_duplicate_objects_have_empty_entry():
    t = symbolic_table("ab", [(1, 1, 1), (1, 1, 2)])
    assert rst.discernibility_matrix(t).entry(1, 0) == frozenset()


def test_matrix_example():
    t = symbolic_table(["a1", "a2"], [(1, 1, 1), (1, 2, 1), (2, 2, 1)])
    m = rst.discernibility_matrix(t)
    assert m.entry(1, 0) == {"a2"}
    assert m.entry(2, 0) == {"a1", "a2"}
    assert m.entry(2, 1) == {"a1"}
    assert m.entry(0, 1) == m.entry(1, 0)
    assert m.entry(1, 1) == frozenset()


def test_single_object_matrix_is_empty():
    t = symbolic_table("ab", [(1, 1, 1)])
    m = rst.discernibility_matrix(t)
    assert m.clauses() == []
    r = rst.reducts(m)
    assert r.degenerate and list(r) == [frozenset()]


def test_single_discerning_attribute_is_unique_reduct():
    t = symbolic_table("ab", [(1, 5, 1), (2, 5, 1), (3, 5, 1)])
    assert list(rst.reducts(rst.discernibility_matrix(t))) == [frozenset({"a"})]


def test_two_singleton_reducts():
    t = symbolic_table(["a1", "a2"], [(1, 1, 1), (2, 2, 1), (3, 3, 1)])
    got = set(rst.reducts(rst.discernibility_matrix(t)))
    assert got == {frozenset({"a1"}), frozenset({"a2"})}
    assert got == oracles.all_reducts(as_dicts(t), ["a1", "a2"])


def test_constant_attribute_in_no_reduct():
    t = symbolic_table("abc", [(1, 7, 1, 1), (2, 7, 2, 1), (1, 7, 2, 2)])
    assert all("b" not in r for r in rst.reducts(rst.discernibility_matrix(t)))


def test_large_table_uses_flagged_heuristic():
    rng = np.random.default_rng(0)
    t = symbolic_table("abce", random_rows(rng, 30, 4, 3))
    r = rst.reducts(rst.discernibility_matrix(t), exact_bound=12)
    assert r.heuristic and len(r) == 1
    red = next(iter(r))
    # the heuristic result still meets every clause and is irredundant
    clauses = rst.discernibility_matrix(t).clauses()
    assert all(red & c for c in clauses)
    assert all(not all((red - {a}) & c for c in clauses) for a in red)


def test_prime_implicants_small_cnf():
    cnf = [frozenset("ab"), frozenset("bc")]
    assert set(rst.prime_implicants(cnf)) == {frozenset("b"), frozenset("ac")}


# -- dependency factor ---------------------------------------------------------------

CONSISTENT = symbolic_table("ab", [(1, 1, 1), (1, 2, 1), (2, 1, 2), (2, 2, 2)])
HALF = symbolic_table("a", [(1, 1), (1, 2), (2, 1), (3, 2)])


def test_df_consistent_is_one():
    rule = rst.RoughRule((("a", {1}),), {1})
    assert rst.dependency_factor(CONSISTENT, rule) == 1.0


def test_df_half():
    rule = rst.RoughRule((("a", {2}),), {1})
    assert rst.dependency_factor(HALF, rule) == 0.5
    assert oracles.dependency(as_dicts(HALF), "a", "d") == 0.5


def test_df_unmatched_rule_is_zero():
    rule = rst.RoughRule((("a", {9}),), {1})
    assert rst.dependency_factor(HALF, rule) == 0.0


def test_df_empty_universe():
    empty = symbolic_table("a", [(1, 1)]).take([])
    with pytest.raises(MeasureError):
        rst.dependency_factor(empty, rst.RoughRule((("a", {1}),), {1}))


def test_df_covered_reading():
    rule = rst.RoughRule((("a", {2}),), {1})
    assert rst.dependency_factor(HALF, rule, rst.COVERED) == 1.0
    rule = rst.RoughRule((("a", {1}),), {1})
    assert rst.dependency_factor(HALF, rule, rst.COVERED) == 0.0


# -- rule induction and the published rule shapes ------------------------------------

def rule_texts(rules):
    return {rst.format_rule(r) for r in rules}


def test_single_attribute_rule_shape():
    t = symbolic_table(["z", "l"], [(2, 1, 1), (2, 2, 1), (1, 1, 2), (1, 2, 3), (3, 1, 3)], "Dec")
    rules = rst.induce_rules(t, "exhaustive")
    assert "(z = 2) ⇒ (Dec = 1);" in rule_texts(rules)


def test_value_set_rule_shape():
    t = symbolic_table(["l", "rqd"],
                       [(2, 2, 1), (3, 2, 1), (1, 2, 2), (2, 1, 2), (3, 1, 3)], "Dec")
    rules = rst.induce_rules(t, "exhaustive")
    assert "(l in {2, 3}) & (rqd = 2) ⇒ (Dec = 1);" in rule_texts(rules)
    unmerged = rst.induce_rules(t, "exhaustive", merge_values=False)
    assert {"(l = 2) & (rqd = 2) ⇒ (Dec = 1);", "(l = 3) & (rqd = 2) ⇒ (Dec = 1);"} <= rule_texts(unmerged)


def test_inconsistent_pair_gives_or_rule_only_when_inexact_allowed():
    t = symbolic_table(["z", "l"], [(3, 1, 1), (3, 1, 3), (3, 2, 2), (1, 1, 2)], "Dec")
    exact = rst.induce_rules(t, "exhaustive", exact_only=True)
    pair = [t.row_dict(0), t.row_dict(1)]
    assert not any(r.matches(o) for r in exact for o in pair)
    loose = rst.induce_rules(t, "exhaustive", exact_only=False)
    assert "(z = 3) & (l = 1) ⇒ (Dec = 1) OR (Dec = 3);" in rule_texts(loose)


def test_one_object_table():
    t = symbolic_table("ab", [(1, 2, 5)])
    rules = rst.induce_rules(t)
    assert len(rules) == 1
    assert rules.rules[0].dependency_factor == 1.0
    assert rules.rules[0].decisions == {5}


def test_empty_table_and_bad_strategy():
    t = symbolic_table("a", [(1, 1)])
    with pytest.raises(InductionError):
        rst.induce_rules(t.take([]))
    with pytest.raises(InductionError):
        rst.induce_rules(t, "greedy")


def test_strong_strategy_threshold():
    t = symbolic_table(["z", "l"], [(3, 1, 1), (3, 1, 3), (3, 2, 2), (1, 1, 2), (2, 2, 1)], "Dec")
    everything = rst.induce_rules(t, "exhaustive", exact_only=False)
    strong = rst.induce_rules(t, "strong", exact_only=False, strength_threshold=0.7)
    assert {r._key() for r in strong} == {r._key() for r in everything if r.dependency_factor >= 0.7}


# -- classification ----------------------------------------------------------------

def test_classify_fallback_and_min_decision():
    rs = rst.RoughRuleSet((rst.RoughRule((("a", {1}),), {1, 3}, 0.5),
                           rst.RoughRule((("a", {2}),), {2}, 1.0)), "Dec")
    assert rst.classify(rs, {"a": 1}) == 1
    assert rst.classify(rs, {"a": 2}) == 2
    assert rst.classify(rs, {"a": 9}) is UNRECOGNIZED
    assert rst.classify_code(rs, {"a": 9}) == 4


def test_classify_prefers_higher_df_then_shorter():
    r1 = rst.RoughRule((("a", {1}), ("b", {1})), {1}, 0.9)
    r2 = rst.RoughRule((("a", {1}),), {2}, 0.9)
    r3 = rst.RoughRule((("b", {1}),), {3}, 0.5)
    rs = rst.RoughRuleSet((r3, r1, r2), "Dec")
    assert rst.ordered_rules(rs) == [r2, r1, r3]
    assert rst.classify(rs, {"a": 1, "b": 1}) == 2
    assert rst.classify(rs, {"a": 1, "b": 1}, tie_policy="given") == 3


def test_classify_table_matches_classify():
    rng = np.random.default_rng(4)
    t = symbolic_table("abc", random_rows(rng, 12, 3, 3))
    rules = rst.induce_rules(t, exact_only=False)
    assert rst.classify_table(rules, t) == [rst.classify(rules, o) for o in as_dicts(t)]


# -- export ------------------------------------------------------------------------

def test_format_parse_roundtrip():
    rng = np.random.default_rng(11)
    t = symbolic_table(["z", "l", "rqd"], random_rows(rng, 10, 3, 3), "Dec")
    rules = rst.induce_rules(t, "exhaustive", exact_only=False)
    for r in rules:
        back = rst.parse_rule(rst.format_rule(r))
        assert back._key() == r._key()
    lines = rst.format_rules(rules).splitlines()
    assert lines[0].startswith("1\t")
    assert rst.parse_rule(lines[0])._key() == rules.rules[0]._key()


def test_empty_antecedent_text():
    r = rst.RoughRule((), {1})
    assert rst.format_rule(r) == "TRUE ⇒ (Dec = 1);"
    assert rst.parse_rule("TRUE ⇒ (Dec = 1);")._key() == r._key()


def test_json_roundtrip_preserves_predictions():
    rng = np.random.default_rng(12)
    t = symbolic_table("abc", random_rows(rng, 12, 3, 3))
    rules = rst.induce_rules(t, exact_only=False)
    back = rst.load_rules(rst.dump_rules(rules))
    assert back == rules
    probes = [dict(zip("abc", p)) for p in itertools.product((1, 2, 3, 4), repeat=3)]
    assert [rst.classify_code(back, p) for p in probes] == [rst.classify_code(rules, p) for p in probes]


# -- properties against brute-force oracles -------------------------------------------

tables = st.integers(1, 8).flatmap(lambda n: st.integers(1, 4).flatmap(lambda k: st.tuples(
    st.just(k),
    st.lists(st.tuples(*[st.integers(1, 3)] * (k + 1)), min_size=n, max_size=n))))


def build(spec):
    k, rows = spec
    names = [f"a{j}" for j in range(k)]
    return names, symbolic_table(names, rows)


@given(tables, st.data())
def test_partition_and_approximations_match_oracle(spec, data):
    names, t = build(spec)
    rows = as_dicts(t)
    b = data.draw(st.lists(st.sampled_from(names), unique=True))
    x = data.draw(st.sets(st.integers(0, len(rows) - 1)))
    got = {frozenset(ids_to_idx(t, c)) for c in rst.indiscernibility_classes(t, b)}
    assert got == oracles.classes(rows, b)
    target = {t.object_ids[i] for i in x}
    lo = rst.lower_approximation(t, b, target)
    up = rst.upper_approximation(t, b, target)
    assert ids_to_idx(t, lo) == oracles.lower(rows, b, x)
    assert ids_to_idx(t, up) == oracles.upper(rows, b, x)
    assert lo <= target <= up


@given(tables, st.data())
def test_approximation_monotonicity(spec, data):
    names, t = build(spec)
    b2 = data.draw(st.lists(st.sampled_from(names), unique=True))
    b1 = [a for a in b2 if data.draw(st.booleans())]
    x = data.draw(st.sets(st.sampled_from(t.object_ids)))
    assert rst.lower_approximation(t, b1, x) <= rst.lower_approximation(t, b2, x)
    assert rst.upper_approximation(t, b2, x) <= rst.upper_approximation(t, b1, x)
    for approx in (rst.lower_approximation(t, b1, x), rst.upper_approximation(t, b1, x)):
        for c in rst.indiscernibility_classes(t, b1):
            assert c <= approx or not c & approx


@given(tables)
def test_matrix_and_reducts_match_oracle(spec):
    names, t = build(spec)
    rows = as_dicts(t)
    m = rst.discernibility_matrix(t)
    want = oracles.discernibility(rows, names)
    for (i, j), entry in want.items():
        assert m.entry(i, j) == entry == m.entry(j, i)
    r = rst.reducts(m)
    assert set(r) == oracles.all_reducts(rows, names)
    full = set(rst.indiscernibility_classes(t, names))
    for red in r:
        assert set(rst.indiscernibility_classes(t, sorted(red))) == full
        for a in red:
            smaller = sorted(red - {a})
            assert set(rst.indiscernibility_classes(t, smaller)) != full


@settings(max_examples=60)
@given(tables)
def test_rule_dependency_factors_match_oracle(spec):
    names, t = build(spec)
    rows = as_dicts(t)
    rules = rst.induce_rules(t, "exhaustive", exact_only=False)
    for r in rules:
        merged = r.decisions if len(r.decisions) > 1 else ()
        covered = {i for i, o in enumerate(rows) if r.matches(o)}
        assert r.dependency_factor == oracles.dependency(rows, r.attributes, "d", merged)
        assert rst.dependency_factor(t, r, rst.COVERED) == \
            oracles.dependency(rows, r.attributes, "d", merged, covered)


@given(tables)
def test_minimal_strategy_covers_and_has_positive_df(spec):
    names, t = build(spec)
    rules = rst.induce_rules(t, "minimal", exact_only=False)
    for o in as_dicts(t):
        assert any(r.matches(o) for r in rules)
    assert all(r.dependency_factor > 0 for r in rules)


@given(tables)
def test_exact_rules_on_consistent_table(spec):
    names, t = build(spec)
    if not rst.is_consistent(t):
        return
    rules = rst.induce_rules(t, "exhaustive", universe=rst.COVERED)
    assert all(r.exact and r.dependency_factor == 1.0 for r in rules)
    # every training object is classified correctly
    for o in as_dicts(t):
        assert rst.classify(rules, o) == o["d"]
