from hypothesis import given, settings

from ebskit.parser import parse_source, parse_source_tolerant
from ebskit.printer import format_expr, pretty_print
from ebskit.syntax import (
    ContextDef, FuncType, Implies, MachineDef, Member, Name,
)

from .conftest import read_data
from .generators import definitions, expressions


def _parse_expr(text: str):
    defs = parse_source(f"CONTEXT T AXIOMS a1 {text} END")
    return defs[0].axioms[0].body


def test_context_figure_parses_with_expected_shape():
    (ctx,) = parse_source(read_data("fig_ccp0.ebs"))
    assert isinstance(ctx, ContextDef)
    assert ctx.name == "CCP0"
    assert len(ctx.sets) == 2
    assert len(ctx.constants) == 4
    assert len(ctx.axioms) == 2
    assert ctx.axioms[0].label == "typ1"


def test_machine_figure_parses_with_expected_shape():
    # the temperature machine as printed: five variables, seven invariants,
    # three events (its initialisation is spelled "Initialization" there)
    (mch,) = parse_source(read_data("fig_mtm0.ebs"))
    assert isinstance(mch, MachineDef)
    assert len(mch.variables) == 5
    assert len(mch.invariants) == 7
    assert len(mch.events) == 3
    assert mch.events[0].name == "Initialization"
    assert isinstance(mch.invariants[0].body, Member)
    assert isinstance(mch.invariants[0].body.set_expr, FuncType)


def test_empty_variable_list_is_an_error_at_the_right_place():
    text = "MACHINE M SEES C VARIABLES EVENTS Event INITIALISATION Then End END"
    defs, errors = parse_source_tolerant(text)
    assert defs == []
    assert errors
    assert errors[0].found == "EVENTS"
    assert "identifier" in errors[0].expected


def test_error_recovery_reports_multiple_blocks():
    text = """
    CONTEXT C1 SETS END
    CONTEXT C2 SETS a, b END
    MACHINE M VARIABLES EVENTS END
    """
    defs, errors = parse_source_tolerant(text)
    assert [d.name for d in defs] == ["C2"]
    assert len(errors) == 2


def test_duplicate_guard_labels_are_parse_errors():
    text = """MACHINE M VARIABLES x INVARIANTS inv1 x : BOOL EVENTS
    Event INITIALISATION Then act1 x := TRUE End
    Event e Where grd1 x = TRUE grd1 x = FALSE Then act1 x := FALSE End
    END"""
    defs, errors = parse_source_tolerant(text)
    assert errors and "fresh guard label" in errors[0].expected


def test_comments_and_unicode_free_ascii_surface():
    text = """// a comment
    CONTEXT C // trailing comment
    SETS S CONSTANTS a AXIOMS typ1 partition(S, {a}) END"""
    (ctx,) = parse_source(text)
    assert ctx.constants == ("a",)


def test_event_flags_and_event_refines_clause():
    text = """MACHINE M VARIABLES x INVARIANTS inv1 x : BOOL EVENTS
    Event INITIALISATION Then act1 x := FALSE End
    Event environment push Then act1 x := TRUE End
    Event convergent spin refines push Where grd1 x = TRUE Then act1 x := FALSE End
    END"""
    (mch,) = parse_source(text)
    push = mch.event("push")
    spin = mch.event("spin")
    assert push.kind == "environment"
    assert spin.convergent and spin.refines == ("push",)


def test_or_keyword_and_pipe_are_both_disjunction():
    assert _parse_expr("a or b") == _parse_expr("a | b")


def test_precedence_golden_table(data_dir):
    for line in (data_dir / "precedence.golden").read_text().splitlines():
        if not line.strip():
            continue
        source, expected = [part.strip() for part in line.split("###", 1)]
        printed = format_expr(_parse_expr(source))
        assert printed == expected, f"{source!r} printed as {printed!r}"


def test_implication_is_right_associative():
    expr = _parse_expr("a => b => c")
    assert isinstance(expr, Implies)
    assert isinstance(expr.right, Implies)
    assert expr.left == Name("a")


def test_relational_operators_do_not_chain():
    defs, errors = parse_source_tolerant("CONTEXT T AXIOMS a1 x = y = z END")
    assert errors


def test_spans_point_into_the_input():
    text = "CONTEXT C SETS (oops) END"
    defs, errors = parse_source_tolerant(text)
    assert errors
    lines = text.splitlines()
    for err in errors:
        line, col = err.span.start
        assert 1 <= line <= len(lines)
        assert 1 <= col <= len(lines[line - 1]) + 1


@given(expressions)
@settings(max_examples=200, deadline=None)
def test_expression_round_trip(expr):
    assert _parse_expr(format_expr(expr)) == expr


@given(definitions)
@settings(max_examples=150, deadline=None)
def test_definition_round_trip(definition):
    (reparsed,) = parse_source(pretty_print(definition))
    assert reparsed == definition


def test_arbitrary_bytes_never_crash_the_parser():
    probes = [
        "", "\x00\x01\x02", "MACHINE", "CONTEXT \xff\xfe", "{{{{{{",
        "MACHINE M END extra garbage (((", "Event", "partition(",
        "0" * 4000, "(" * 500 + ")" * 500,
    ]
    for text in probes:
        defs, errors = parse_source_tolerant(text)
        assert isinstance(defs, list) and isinstance(errors, list)
