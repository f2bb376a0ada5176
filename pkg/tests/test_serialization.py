import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src import serialization
from src.bundles import fan_family, partition_family
from src.errors import (
    ContextInvariantError,
    CorruptPosetError,
    NotAnIsomorphismError,
    ObjectMismatchError,
    SchemaError,
    ShapeMismatchError,
)
from src.exact_arith import GaussianRational
from src.presheaf_morphisms import induce_presheaf_morphism
from src.serialization import Workspace, dumps, encode_element, format_scalar, load, loads, save, to_document
from src.spectral_presheaf import presheaf_for
from src.star_algebra import StarAlgebra, diagonal_embedding, permutation_hom, transpose_map

rationals = st.fractions(max_denominator=50).filter(lambda q: abs(q) < 1000)


def _stable(obj):
    text = dumps(obj)
    assert dumps(loads(text)) == text
    return text


def test_poset_document_is_stable(c3, fan):
    for poset in (c3, fan):
        text = _stable(poset)
        assert loads(text) == poset


def test_presheaf_document_is_stable(c3):
    sigma = presheaf_for(c3)
    assert loads(_stable(sigma)) == sigma


def test_hom_document_is_stable():
    h = diagonal_embedding(2, (1, 2), "diag")
    loaded = loads(_stable(h))
    assert loaded.matrix == h.matrix
    assert loaded.name == "diag"


def test_morphism_document_is_stable(c3):
    sigma = presheaf_for(c3)
    m = induce_presheaf_morphism(permutation_hom(3, (1, 2, 0)), sigma, sigma)
    assert loads(_stable(m)) == m


def test_family_documents_are_stable():
    _stable(fan_family(3))
    _stable(partition_family(3))


def test_save_and_load(tmp_path, c3):
    path = tmp_path / "nested" / "c3.json"
    save(path, c3)
    assert path.read_text(encoding='utf-8').endswith("}\n")
    assert load(path) == c3


def _c3_document(c3):
    return to_document(c3)


def test_atoms_must_sum_to_one(c3):
    doc = _c3_document(c3)
    doc['contexts'][-1]['atoms'] = doc['contexts'][-1]['atoms'][:2]
    del doc['covers']
    with pytest.raises(ContextInvariantError) as info:
        loads(json.dumps(doc))
    assert 'residual' in info.value.witness['detail']
    assert info.value.witness['context'] == len(c3) - 1


def test_missing_trivial_context(c3):
    doc = _c3_document(c3)
    doc['contexts'] = doc['contexts'][1:]
    del doc['covers']
    with pytest.raises(CorruptPosetError):
        loads(json.dumps(doc))


def test_stored_covers_are_checked(c3):
    doc = _c3_document(c3)
    top = len(c3) - 1
    assert doc['covers'][0] == [1, 2, 3]
    assert doc['covers'][1] == [top]
    doc['covers'][1] = []
    with pytest.raises(CorruptPosetError) as info:
        loads(json.dumps(doc))
    assert info.value.witness['missing'] == [(1, top)]

    doc['covers'][1] = [99]
    with pytest.raises(CorruptPosetError):
        loads(json.dumps(doc))


def test_duplicate_context(c3):
    doc = _c3_document(c3)
    doc['contexts'].append(doc['contexts'][0])
    del doc['covers']
    with pytest.raises(CorruptPosetError):
        loads(json.dumps(doc))


def test_malformed_json_reports_line():
    with pytest.raises(SchemaError) as info:
        loads('{\n  "kind": "poset",\n  "algebra": \n}', source="broken.json")
    assert info.value.witness['line'] == 4
    assert "broken.json" in str(info.value)


def test_numeric_entries_are_rejected(c3):
    doc = _c3_document(c3)
    doc['contexts'][0]['atoms'][0]['entries'][0] = 1
    with pytest.raises(SchemaError) as info:
        loads(json.dumps(doc))
    assert info.value.witness['field'].startswith("poset.contexts.0.atoms")


def test_unparseable_scalar_names_its_location(c3):
    doc = _c3_document(c3)
    doc['contexts'][0]['atoms'][0]['entries'][0] = "0.5"
    with pytest.raises(SchemaError) as info:
        loads(json.dumps(doc))
    assert info.value.witness == "contexts[0].atoms[0]"


def test_unknown_kind():
    with pytest.raises(SchemaError):
        loads(json.dumps({'kind': 'sheaf'}))


def test_unknown_observable():
    doc = to_document(fan_family(2))
    doc['contexts'][0]['observables'] = ["R9"]
    with pytest.raises(SchemaError) as info:
        loads(json.dumps(doc))
    assert info.value.witness == ["R9"]


def test_partitions_must_cover_every_point():
    doc = to_document(partition_family(3))
    doc['partitions'][1] = [[0], [1]]
    with pytest.raises(SchemaError):
        loads(json.dumps(doc))


def test_partitions_must_be_closed():
    doc = to_document(partition_family(3))
    doc['partitions'] = [p for p in doc['partitions'] if len(p) != 1]
    with pytest.raises(CorruptPosetError):
        loads(json.dumps(doc))


def test_hom_document_must_be_a_hom(m2):
    with pytest.raises(NotAnIsomorphismError):
        loads(dumps(transpose_map(m2)))


def test_presheaf_restrictions_are_checked(c3):
    doc = to_document(presheaf_for(c3))
    top = doc['restrictions'][-1]
    top['table'] = list(reversed(top['table']))
    with pytest.raises(CorruptPosetError):
        loads(json.dumps(doc))


def test_unserialisable_object():
    with pytest.raises(ObjectMismatchError):
        dumps(object())


@given(rationals, rationals)
def test_format_scalar_reads_back(re, im):
    x = GaussianRational(re, im)
    assert GaussianRational.parse(format_scalar(x)) == x


@pytest.mark.parametrize("x, text", [
    (GaussianRational(0), "0"),
    (GaussianRational(3, 0), "3"),
    (GaussianRational(0, 1), "i"),
    (GaussianRational(0, -1), "-i"),
])
def test_format_scalar_is_compact(x, text):
    assert format_scalar(x) == text


def test_workspace(tmp_path, c3, c4):
    ws = Workspace()
    ws.put("c3", c3)
    ws.put("c3", c3)
    assert ws.get("c3") is c3
    with pytest.raises(ObjectMismatchError):
        ws.put("c3", c4)
    with pytest.raises(ObjectMismatchError):
        ws.get("c5")

    path = tmp_path / "c3.json"
    ws.save("c3", path)
    assert ws.load("copy", path) == c3
    assert ws.labels() == ["c3", "copy"]


DATA_FILES = sorted((Path(__file__).resolve().parent.parent / "data").rglob("*.json"))


@pytest.mark.parametrize("path", DATA_FILES, ids=lambda p: p.name)
def test_bundled_files_are_canonical(path):
    assert dumps(load(path)) == path.read_text(encoding='utf-8')


def test_element_document_layout():
    unit = StarAlgebra((1, 2)).unit()
    assert encode_element(unit) == {'shape': [1, 2], 'entries': ["1", "1", "0", "0", "1"]}


def test_element_shape_must_match_algebra(c3):
    doc = _c3_document(c3)
    doc['contexts'][0]['atoms'][0]['shape'] = [3]
    with pytest.raises(ShapeMismatchError) as info:
        loads(json.dumps(doc))
    assert info.value.witness['at'] == "contexts[0].atoms[0]"


def test_hom_document_layout():
    doc = to_document(permutation_hom(3, (1, 2, 0), "cycle"))
    assert set(doc) == {'kind', 'name', 'source', 'target', 'matrix'}
    assert set(doc['matrix']) == {'shape', 'entries'}
    assert doc['matrix']['shape'] == [3, 3]
    rows = [doc['matrix']['entries'][3 * i:3 * i + 3] for i in range(3)]
    assert all(sorted(row) == ["0", "0", "1"] for row in rows)


def test_hom_matrix_shape_is_checked():
    doc = to_document(diagonal_embedding(2, (1, 2)))
    assert doc['matrix']['shape'] == [3, 2]
    doc['matrix']['shape'] = [2, 3]
    with pytest.raises(ShapeMismatchError):
        loads(json.dumps(doc))
    doc['matrix']['shape'] = [3, 2]
    doc['matrix']['entries'].pop()
    with pytest.raises(ShapeMismatchError):
        loads(json.dumps(doc))


def test_missing_file_is_a_schema_error(tmp_path):
    path = tmp_path / "absent.json"
    with pytest.raises(SchemaError) as info:
        load(path)
    assert info.value.witness == {'path': str(path)}


def test_workspace_reads_each_path_once(tmp_path, c3, monkeypatch):
    path = tmp_path / "c3.json"
    save(path, c3)
    calls = []
    original = serialization.load

    def counting_load(p):
        calls.append(p)
        return original(p)

    monkeypatch.setattr(serialization, "load", counting_load)
    ws = Workspace()
    first = ws.fetch(path)
    assert ws.fetch(str(path)) is first
    assert first == c3
    assert len(calls) == 1
    assert ws.labels() == [str(path)]
