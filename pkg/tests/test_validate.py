import pytest

from pepaflow.core import compile_model, is_valid, validate
from pepaflow.errors import ModelError
from pepaflow.netmodels import golden_path
from pepaflow.parser import parse_model


def codes(text):
    return {d.code for d in validate(parse_model(text))}


@pytest.mark.parametrize("text, code", [
    ("rates { r = -1.0; } A = (a, r).B; B = (b, 1.0).A; system: A[1]", "E_NONPOS_RATE"),
    ("rates { r = 0; } A = (a, r).B; B = (b, 1.0).A; system: A[1]", "E_NONPOS_RATE"),
    ("A = (a, q).B; B = (b, 1.0).A; system: A[1]", "E_UNBOUND_RATE"),
    ("A = (a, 1.0).Z; system: A[1]", "E_UNDEF_STATE"),
    ("A = (a, 1.0).B; B = (b, 1.0).A; system: B2[1]", "E_UNDEF_COMPONENT"),
    ("A = (a, 1.0).A; system: A[1]", "E_SELF_LOOP"),
    ("A = (a, 1.0).B + (a, T).B; B = (b, 1.0).A; system: A[1]", "E_MIXED_RATE"),
    ("A = (a, T).B; B = (b, 1.0).A; system: A[1]", "E_PASSIVE_UNSYNC"),
    ("A = (a, 1.0).B; B = (b, 1.0).A; system: A[0]", "E_BAD_POPULATION"),
    ("A = (a, 1.0).B; B = (b, 1.0).A; system: A[1] <> B[1]", "E_ALIASED_GROUP"),
])
def test_error_codes(text, code):
    found = codes(text)
    assert code in found
    assert not is_valid(validate(parse_model(text)))


@pytest.mark.parametrize("text, code", [
    ("A = (a, 1.0).B; B = (b, 1.0).A; C = (c, 1.0).A; system: A[1]", "W_UNREACHABLE"),
    ("A = (a, 1.0).B; B = (b, 1.0).A; D = (d, 1.0).E; E = (e, 1.0).D; system: A[1]",
     "W_UNUSED_COMPONENT"),
    ("A = (a, 1.0).B; B = (b, 1.0).A; D = (d, 1.0).E; E = (e, 1.0).D;"
     " system: A[1] <z> D[1]", "W_COOP_ONE_SIDED"),
])
def test_warnings_do_not_invalidate(text, code):
    diags = validate(parse_model(text))
    assert code in {d.code for d in diags}
    assert is_valid(diags)


def test_diagnostics_carry_source_spans():
    text = "rates { r = -2; }\nA = (a, r).B;\nB = (b, 1.0).A;\nsystem: A[1]"
    (diag,) = [d for d in validate(parse_model(text)) if d.code == "E_NONPOS_RATE"]
    assert diag.span is not None and diag.span.line == 1
    assert str(diag).startswith("1:")


def test_compile_refuses_invalid_models():
    with pytest.raises(ModelError) as info:
        compile_model(parse_model("A = (a, 1.0).Z; system: A[1]"))
    assert any(d.code == "E_UNDEF_STATE" for d in info.value.diagnostics)


def test_passive_synchronised_with_active_partner_is_fine():
    text = "C = (req, 1.0).C2; C2 = (x, 1.0).C; S = (req, T).S; system: C[4] <req> S[1]"
    assert is_valid(validate(parse_model(text)))


@pytest.mark.parametrize("arch", ["ssba", "baseline5g"])
@pytest.mark.parametrize("preset_id", ["b1", "b2"])
def test_shipped_models_have_no_diagnostics(arch, preset_id):
    spec = parse_model(golden_path(arch, preset_id).read_text())
    assert validate(spec) == []
