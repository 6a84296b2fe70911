import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from querysplit.errors import AmbiguousColumn, SqlSyntaxError, UnknownAttribute, UnknownTable
from querysplit.sqlang import (
    Aggregate,
    ColumnRef,
    Comparison,
    JoinCondition,
    QueryAst,
    TableInstance,
    bind,
    extract_attributes,
    extract_tables,
    parse_query,
    render,
)

# --- parsing ----------------------------------------------------------------


def test_parse_count_aggregate():
    ast = parse_query("Select count(objID) from PhotoPrimary;")
    assert len(ast.sources) == 1
    assert ast.sources[0].table == "PhotoPrimary"
    assert ast.projections == (Aggregate("count", ColumnRef(None, "objID")),)
    assert ast.limit is None


def test_parse_limit_zero_is_legal():
    ast = parse_query("SELECT a FROM t LIMIT 0")
    assert ast.limit == 0


def test_parse_self_join_has_two_instances():
    ast = parse_query(
        "SELECT p.objID FROM PhotoPrimary p, PhotoPrimary q WHERE p.parentID = q.objID"
    )
    assert len(ast.sources) == 2
    assert [s.table for s in ast.sources] == ["PhotoPrimary", "PhotoPrimary"]
    assert ast.join_conditions == (
        JoinCondition(ColumnRef("p", "parentID"), ColumnRef("q", "objID")),
    )


def test_parse_range_predicates_and_limit():
    ast = parse_query(
        "SELECT objID, ra,dec FROM PhotoPrimary WHERE ra > 185 and ra< 185.1 "
        "AND dec > 56.2 and dec < 56.3 limit 100;"
    )
    assert len(ast.predicates) == 4
    assert ast.limit == 100
    assert ast.predicates[0] == Comparison(ColumnRef(None, "ra"), ">", 185)
    assert ast.predicates[1].value == 185.1


def test_parse_join_on_syntax():
    ast = parse_query("SELECT a.x FROM t AS a JOIN u AS b ON a.id = b.id AND a.y = b.y WHERE a.x > 1")
    assert len(ast.sources) == 2
    assert len(ast.join_conditions) == 2
    assert len(ast.predicates) == 1


def test_parse_keywords_case_insensitive_identifiers_preserved():
    ast = parse_query("sElEcT RA from PhotoPrimary WhErE RA >= 5")
    assert ast.projections[0] == ColumnRef(None, "RA")


def test_parse_string_literal_with_escape():
    ast = parse_query("SELECT a FROM t WHERE name = 'O''Neil'")
    assert ast.predicates[0].value == "O'Neil"


def test_parse_negative_literal():
    ast = parse_query("SELECT a FROM t WHERE a > -5.5")
    assert ast.predicates[0].value == -5.5


@pytest.mark.parametrize(
    "sql,needle",
    [
        ("SELECT a FROM t ORDER BY a", "ORDER BY"),
        ("SELECT a FROM t GROUP BY a", "GROUP BY"),
        ("SELECT a FROM (SELECT b FROM u)", "subquery"),
        ("SELECT a FROM t WHERE a > 1 OR a < 0", "OR"),
        ("SELECT DISTINCT a FROM t", "DISTINCT"),
        ("SELECT sum(a) FROM t", "unsupported function"),
        ("SELECT a FROM t UNION SELECT b FROM u", "UNION"),
        ("SELECT a, count(b) FROM t", "mixed aggregate"),
        ("SELECT a FROM t LIMIT -1", "non-negative"),
        ("SELECT avg(*) FROM t", "COUNT(*)"),
        ("SELECT * FROM t", "COUNT(*)"),
        ("SELECT a FROM t WHERE a = b", "at least two table instances"),
        ("SELECT a FROM t, t WHERE t.a < t.b", "'='"),
        ("SELECT a FROM t x, u x", "duplicate alias"),
        ("SELECT a FROM t WHERE 1 < a", "column reference"),
        ("SELECT a FROM t LIMIT 5 nonsense", "trailing"),
    ],
)
def test_parse_rejects_out_of_dialect(sql, needle):
    with pytest.raises(SqlSyntaxError) as err:
        parse_query(sql)
    assert needle.lower() in str(err.value).lower()


def test_syntax_error_carries_position():
    with pytest.raises(SqlSyntaxError) as err:
        parse_query("SELECT a FROM t ORDER BY a")
    assert err.value.pos == 16


# --- extraction -------------------------------------------------------------


def test_extract_tables_lengths():
    assert len(extract_tables(parse_query("SELECT a FROM t"))) == 1
    self_join = parse_query("SELECT p.a FROM t p, t q WHERE p.id = q.id")
    assert [i.table for i in extract_tables(self_join)] == ["t", "t"]
    three = parse_query("SELECT x.a FROM t x, u y, v z WHERE x.id = y.id AND y.id = z.id")
    assert len(extract_tables(three)) == 3


def photo_schema():
    from querysplit.catalog import extract_schema

    return extract_schema(
        "CREATE TABLE PhotoPrimary (objID BIGINT PRIMARY KEY, ra DOUBLE, dec DOUBLE, parentID BIGINT);"
    )


def test_extract_attributes_single_aggregate():
    schema = photo_schema()
    ast = parse_query("Select count(objID) from PhotoPrimary")
    assert extract_attributes(ast, schema) == {("PhotoPrimary", "objID")}


def test_extract_attributes_projection_and_predicates():
    schema = photo_schema()
    ast = parse_query(
        "SELECT objID, ra,dec FROM PhotoPrimary WHERE ra > 185 and ra< 185.1"
    )
    assert extract_attributes(ast, schema) == {
        ("PhotoPrimary", "objID"),
        ("PhotoPrimary", "ra"),
        ("PhotoPrimary", "dec"),
    }


def test_extract_attributes_count_star_empty():
    schema = photo_schema()
    assert extract_attributes(parse_query("SELECT COUNT(*) FROM PhotoPrimary"), schema) == set()


def test_extract_attributes_case_folds_to_schema_names():
    schema = photo_schema()
    ast = parse_query("SELECT OBJID FROM photoprimary WHERE RA > 1")
    assert extract_attributes(ast, schema) == {
        ("PhotoPrimary", "objID"),
        ("PhotoPrimary", "ra"),
    }


def test_bind_errors(sky_schema):
    with pytest.raises(UnknownTable):
        bind(parse_query("SELECT a FROM nosuch"), sky_schema)
    with pytest.raises(UnknownAttribute):
        bind(parse_query("SELECT nosuch FROM sky"), sky_schema)
    with pytest.raises(AmbiguousColumn):
        bind(parse_query("SELECT a FROM sky x, sky y WHERE x.id = y.id"), sky_schema)
    with pytest.raises(AmbiguousColumn):
        # Unaliased self-join: the bare table name matches both instances.
        bind(parse_query("SELECT sky.a FROM sky, sky WHERE sky.id = sky.id"), sky_schema)
    with pytest.raises(SqlSyntaxError):
        bind(parse_query("SELECT x.a FROM sky x, sky y WHERE x.id = x.id"), sky_schema)


def test_extract_attributes_subset_of_schema(sky_schema):
    ast = parse_query("SELECT x.a, y.b FROM sky x, sky y WHERE x.id = y.id AND x.c > 1")
    attrs = extract_attributes(ast, sky_schema)
    assert attrs <= sky_schema.all_attrs()


# --- render round-trip --------------------------------------------------------

_TABLES = ["tbl", "Photo", "stars", "x1"]
_COLS = ["objID", "ra", "dec", "mag", "z_1", "NameX"]
_FLOATS = st.floats(allow_nan=False, allow_infinity=False, width=64)
_LITERALS = st.one_of(
    st.integers(-(10**9), 10**9),
    _FLOATS,
    st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=8),
)


@st.composite
def _asts(draw) -> QueryAst:
    n_sources = draw(st.integers(1, 3))
    sources = []
    for i in range(n_sources):
        table = draw(st.sampled_from(_TABLES))
        alias = f"s{i}" if draw(st.booleans()) or n_sources > 1 else None
        sources.append(TableInstance(table, alias))
    bindings = [s.alias or s.table for s in sources]

    def col_ref():
        qualifier = draw(st.sampled_from(bindings)) if draw(st.booleans()) else None
        return ColumnRef(qualifier, draw(st.sampled_from(_COLS)))

    if draw(st.booleans()):
        projections = tuple(col_ref() for _ in range(draw(st.integers(1, 3))))
    else:
        aggs = []
        for _ in range(draw(st.integers(1, 2))):
            func = draw(st.sampled_from(["count", "avg", "min", "max"]))
            arg = None if func == "count" and draw(st.booleans()) else col_ref()
            aggs.append(Aggregate(func, arg))
        projections = tuple(aggs)

    join_conditions = ()
    if n_sources >= 2:
        join_conditions = tuple(
            JoinCondition(col_ref(), col_ref()) for _ in range(draw(st.integers(0, 2)))
        )
    predicates = tuple(
        Comparison(col_ref(), draw(st.sampled_from(["<", "<=", ">", ">=", "=", "<>"])), draw(_LITERALS))
        for _ in range(draw(st.integers(0, 3)))
    )
    limit = draw(st.one_of(st.none(), st.integers(0, 1000)))
    return QueryAst(projections, tuple(sources), join_conditions, predicates, limit)


@settings(max_examples=300, deadline=None)
@given(_asts())
def test_render_parse_round_trip(ast):
    assert parse_query(render(ast)) == ast
