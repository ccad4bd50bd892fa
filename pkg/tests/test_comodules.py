from __future__ import annotations

import pytest
from concurrent.futures import ThreadPoolExecutor

from mtucobar.bpalgebra import GeneratorTable
from mtucobar.comodules import (
    ComoduleSpec,
    Family,
    Mode,
    basis,
    coaction,
    coaction_B,
    coaction_of,
    coassociativity_defect,
    counit_defect,
    parse_element,
)
from mtucobar.errors import ParseError, UnavailableModeError, WindowError
from mtucobar.exactlin import partitions


def names(spec, t):
    table = spec.table
    return [table.format_monomial(x.mono) for x in basis(spec, t)]


def psi(spec, text, mode=Mode.DERIVED):
    return str(coaction_of(spec, parse_element(spec, text), mode))


def test_spec_validation():
    with pytest.raises(ValueError):
        ComoduleSpec(Family.MTU, d=0)
    with pytest.raises(ValueError):
        ComoduleSpec(Family.MTU_DR, d=3, r=4)
    with pytest.raises(ValueError):
        ComoduleSpec(Family.MU, degree_bound=7)
    assert ComoduleSpec("mtubar", d=6).window == (7, None)
    assert ComoduleSpec("mtudr", d=5, r=2).window == (4, 5)


def test_basis_examples():
    spec = ComoduleSpec(Family.MTUBAR, d=6, degree_bound=18)
    assert names(spec, 14) == ["B1^7"]
    assert set(names(spec, 16)) == {"B2 B1^6", "B1^8", "v1 B1^7"}
    assert set(names(spec, 18)) == {"B3 B1^6", "B2^2 B1^5", "B2 B1^7", "B1^9", "v1 B2 B1^6", "v1 B1^8", "v1^2 B1^7"}
    assert names(spec, 12) == []
    assert names(ComoduleSpec(Family.SPHERE, degree_bound=8), 6) == ["v2", "v1^3"]


def test_basis_is_deterministic_and_in_window():
    spec = ComoduleSpec(Family.MTU_DR, d=4, r=2, degree_bound=20)
    for t in range(0, 21, 2):
        elems = basis(spec, t)
        assert elems == basis(spec, t)
        assert all(spec.contains(x.b_degree) and x.degree == t for x in elems)


@pytest.mark.parametrize("d", range(1, 7))
def test_mtu_b_only_counts(d):
    spec = ComoduleSpec(Family.MTU, d=d, degree_bound=20)
    for n in range(0, 11):
        b_only = [x for x in basis(spec, 2 * n) if not any(x.v_exponents)]
        assert len(b_only) == len(partitions(n, max_length=d))


@pytest.mark.parametrize("d", range(1, 6))
def test_mtu_d1_counts(d):
    # (B-degree = d) consists of B-monomials with exactly d factors
    spec = ComoduleSpec(Family.MTU_DR, d=d, r=1, degree_bound=20)
    for n in range(0, 11):
        b_only = [x for x in basis(spec, 2 * n) if not any(x.v_exponents)]
        assert len(b_only) == len(partitions(n, min_length=d, max_length=d))


def test_coaction_B_examples():
    t = GeneratorTable(2, 8)
    assert str(coaction_B(t, 0)) == "1 (x) 1"
    assert str(coaction_B(t, 1)) == "t1 (x) 1 + 1 (x) B1"
    assert str(coaction_B(t, 1, Mode.PAPER_TABLE)) == "t1 (x) 1 + 1 (x) B1"
    b2 = coaction_B(t, 2)
    assert b2.coefficient((t.mono(t1=1),), t.mono(B1=1)) == 2
    assert b2.coefficient((t.one,), t.mono(B2=1)) == 1
    b3 = coaction_B(t, 3)
    assert b3.coefficient((t.mono(t1=1),), t.mono(B2=1)) == 3


def test_coaction_B_derived_values():
    t = GeneratorTable(2, 8)
    assert str(coaction_B(t, 2)) == "2 t1 (x) B1 + t1 (x) v1 + 1 (x) B2"
    assert str(coaction_B(t, 3)) == (
        "t2 (x) 1 - t1^3 (x) 1 + t1^2 (x) B1 + t1^2 (x) v1 + 3 t1 (x) B2"
        " + 2 t1 (x) v1 B1 + t1 (x) v1^2 + 1 (x) B3"
    )


def test_unavailable_mode():
    with pytest.raises(UnavailableModeError):
        coaction_B(GeneratorTable(2, 8), 4, Mode.PAPER_TABLE)
    with pytest.raises(UnavailableModeError):
        coaction_B(GeneratorTable(3, 8), 1, Mode.PAPER_TABLE)


@pytest.mark.parametrize("d", [5, 6, 7])
@pytest.mark.parametrize("mode", list(Mode))
def test_mtubar_low_coactions(d, mode):
    spec = ComoduleSpec(Family.MTUBAR, d=d, degree_bound=2 * d + 4)
    n = d + 1
    assert psi(spec, f"B1^{n}", mode) == f"1 (x) B1^{n}"
    assert psi(spec, f"B2*B1^{d}", mode) == f"2 t1 (x) B1^{n} + 1 (x) B2 B1^{d}"
    assert psi(spec, f"B1^{d + 2}", mode) == f"{d + 2} t1 (x) B1^{n} + 1 (x) B1^{d + 2}"
    assert psi(spec, f"v1*B1^{n}", mode) == f"-2 t1 (x) B1^{n} + 1 (x) v1 B1^{n}"


FAMILIES = [
    ComoduleSpec(Family.SPHERE, p=2, degree_bound=12),
    ComoduleSpec(Family.SPHERE, p=3, degree_bound=16),
    ComoduleSpec(Family.MU, p=2, degree_bound=12),
    ComoduleSpec(Family.MU, p=3, degree_bound=16),
    ComoduleSpec(Family.MTU, d=2, p=2, degree_bound=12),
    ComoduleSpec(Family.MTU, d=3, p=3, degree_bound=16),
    ComoduleSpec(Family.MTUBAR, d=3, p=2, degree_bound=14),
    ComoduleSpec(Family.MTUBAR, d=2, p=3, degree_bound=16),
    ComoduleSpec(Family.MTU_DR, d=4, r=2, p=2, degree_bound=14),
]


@pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: f"{s.label}-p{s.p}")
def test_counit_and_coassociativity(spec):
    for t in range(0, spec.degree_bound + 1, 2):
        for x in basis(spec, t):
            assert counit_defect(spec, x) == {}
            assert not coassociativity_defect(spec, x)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_mtu_window_closure(d):
    spec = ComoduleSpec(Family.MTU, d=d, degree_bound=16)
    for t in range(0, 17, 2):
        for x in basis(spec, t):
            out = coaction(spec, x)
            assert all(spec.table.b_degree(rm) <= d for (_, rm) in out.terms)


def test_window_errors():
    spec = ComoduleSpec(Family.MTU, d=2, degree_bound=12)
    with pytest.raises(WindowError):
        coaction(spec, spec.table.mono(B1=3))
    bar = ComoduleSpec(Family.MTUBAR, d=2, degree_bound=12)
    with pytest.raises(WindowError):
        coaction(bar, bar.table.mono(B1=2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_top_power_primitive_in_mtu_d1(d):
    spec = ComoduleSpec(Family.MTU_DR, d=d, r=1, degree_bound=2 * d)
    assert psi(spec, f"B1^{d}") == f"1 (x) B1^{d}"


def test_table_mode_b3_is_not_coassociative():
    spec = ComoduleSpec(Family.MU, degree_bound=6)
    b3 = next(x for x in basis(spec, 6) if spec.table.format_monomial(x.mono) == "B3")
    defect = coassociativity_defect(spec, b3, Mode.PAPER_TABLE)
    assert str(defect) == "-3 t1^2 (x) t1 (x) 1 - 4 t1 (x) t1^2 (x) 1 + t1 (x) t1 (x) v1"
    assert not coassociativity_defect(spec, b3, Mode.DERIVED)


def test_modes_agree_on_b2_terms_with_b_in_right_slot():
    t = GeneratorTable(2, 8)

    def upper(tensor):
        return {k: c for k, c in tensor.terms.items() if t.b_degree(k[1]) > 0}

    assert upper(coaction_B(t, 2)) == upper(coaction_B(t, 2, Mode.PAPER_TABLE))
    assert upper(coaction_B(t, 1)) == upper(coaction_B(t, 1, Mode.PAPER_TABLE))


def test_parse_element_errors():
    spec = ComoduleSpec(Family.MTUBAR, d=6, degree_bound=20)
    with pytest.raises(ParseError):
        parse_element(spec, "B2*(B1")
    with pytest.raises(ParseError):
        parse_element(spec, "B1^2")
    with pytest.raises(ParseError):
        parse_element(spec, "t1*B1^7")
    with pytest.raises(ParseError):
        parse_element(spec, "Q1")
    assert str(parse_element(spec, "B1^7 + v1*B1^7")) in {"B1^7 + v1 B1^7", "v1 B1^7 + B1^7"}


def test_concurrent_coaction_queries():
    spec = ComoduleSpec(Family.MTUBAR, d=4, degree_bound=16)
    elems = [x for t in range(10, 17, 2) for x in basis(spec, t)]
    serial = [str(coaction(spec, x)) for x in elems]
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = list(pool.map(lambda x: str(coaction(spec, x)), elems))
    assert threaded == serial
