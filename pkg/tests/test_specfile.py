import copy
import json
from importlib import resources

import numpy as np
import pytest

from liectrl.catalog import FIXTURES, INNER_ELEMENTS, fixture_documents
from liectrl.errors import ParseError, UnsupportedRealization, ValidationFailed
from liectrl.specfile import dump_spec, dumps, load_spec, parse_spec, to_document, write_spec

FIXTURE_DIR = resources.files("liectrl") / "fixtures"


def shipped(name):
    return json.loads((FIXTURE_DIR / f"{name}.json").read_text())


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_shipped_file_matches_catalog(name):
    assert shipped(name) == fixture_documents()[name]


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_round_trip(name, tmp_path):
    path = tmp_path / f"{name}.json"
    write_spec(path, fixture_documents()[name])
    spec = load_spec(path)
    sys, r = FIXTURES[name]()
    np.testing.assert_array_equal(spec.system.algebra.structure, sys.algebra.structure)
    np.testing.assert_array_equal(spec.system.derivation, sys.derivation)
    np.testing.assert_array_equal(spec.system.control_fields, sys.control_fields)
    assert spec.realization.kinds == r.kinds
    assert dump_spec(spec) == fixture_documents()[name]
    assert path.read_text() == dumps(dump_spec(spec)) + "\n"


def test_digest_tracks_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    doc = fixture_documents()["sl2_ex_ii"]
    write_spec(a, doc)
    b.write_text(json.dumps(doc))
    assert load_spec(a).digest != load_spec(b).digest
    assert load_spec(a).digest == load_spec(a).digest


def test_inner_element_kept():
    spec = parse_spec(shipped("sl2_ex_ii"))
    np.testing.assert_array_equal(spec.inner_element, INNER_ELEMENTS["sl2_ex_ii"])


def test_dumps_keeps_scalar_lists_inline():
    text = dumps({"a": [1, 2], "b": [[1, 2], [3, 4]]})
    assert '"a": [1, 2]' in text
    assert "    [1, 2],\n    [3, 4]" in text


# -- errors -------------------------------------------------------------------


def broken(name="sl2_ex_ii"):
    return copy.deepcopy(shipped(name))


@pytest.mark.parametrize(
    "edit, path",
    [
        (lambda d: d["algebra"]["structure"].__setitem__(0, [1, 0, 1, -2.0]), "$.algebra.structure[0]"),
        (lambda d: d["algebra"]["structure"].__setitem__(2, [1, 2, 5, -1.0]), "$.algebra.structure[2]"),
        (lambda d: d["algebra"]["structure"].append([0, 1, 1, 3.0]), "$.algebra.structure[3]"),
        (lambda d: d["algebra"].__setitem__("dim", "three"), "$.algebra.dim"),
        (lambda d: d.pop("algebra"), "$"),
        (lambda d: d["derivation"].__setitem__("kind", "outer"), "$.derivation.kind"),
        (lambda d: d["derivation"].__setitem__("inner_element", [1.0, 0.0]), "$.derivation.inner_element"),
        (lambda d: d.__setitem__("control_fields", []), "$.control_fields"),
        (lambda d: d.__setitem__("control_fields", [[0.0, "x", 1.0]]), "$.control_fields"),
        (lambda d: d.__setitem__("range", {"restricted": [[0.5, 1.0]]}), "$.range.restricted"),
        (lambda d: d.__setitem__("range", "bounded"), "$.range"),
        (lambda d: d["group"]["factors"][0].__setitem__("type", "torus"), "$.group.factors[0].type"),
        (lambda d: d.__setitem__("realization_derivation", ["inner", "inner"]), "$.realization_derivation"),
        (lambda d: d.__setitem__("realization_derivation", ["fancy"]), "$.realization_derivation[0]"),
    ],
)
def test_parse_errors_carry_paths(edit, path):
    doc = broken()
    edit(doc)
    with pytest.raises(ParseError) as info:
        parse_spec(doc)
    assert info.value.path == path


def test_jacobi_violation():
    doc = broken()
    doc["algebra"]["structure"][0][3] = -3.0
    with pytest.raises(ValidationFailed) as info:
        parse_spec(doc)
    assert info.value.residuals["jacobi"] == pytest.approx(1.0)


def test_non_derivation_matrix():
    doc = broken()
    doc["derivation"] = {"kind": "matrix", "matrix": np.eye(3).tolist()}
    with pytest.raises(ValidationFailed):
        parse_spec(doc)


def test_unsupported_realization():
    doc = broken()
    doc["realization_derivation"] = ["trivial"]
    with pytest.raises(UnsupportedRealization):
        parse_spec(doc)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_spec(tmp_path / "nope.json")


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{\n  'name': 1\n}")
    with pytest.raises(ParseError) as info:
        load_spec(p)
    assert "line 2" in str(info.value)


def test_matrix_derivation_document():
    sys, r = FIXTURES["rolling_sphere"]()
    doc = to_document(sys, r)
    assert doc["derivation"]["kind"] == "matrix"
    assert parse_spec(doc).system.derivation.tolist() == sys.derivation.tolist()
