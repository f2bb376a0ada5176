"""
JSON formats and the workspace.

Every document is a JSON object with a "kind" field: poset, generated,
partitions, presheaf, hom or presheaf_morphism (see docs/formats.md).
Scalars are strings such as "3/4" or "1-2 i"; JSON numbers are rejected
for matrix entries. Loading revalidates every invariant, so a file that
parses is a valid object.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from src.bundles import GeneratedFamily, PartitionFamily
from src.context_poset import Context, ContextPoset, intersect, trivial_context
from src.errors import (
    CorruptPosetError,
    NotAnIsomorphismError,
    ObjectMismatchError,
    SchemaError,
    ShapeMismatchError,
    SpectralPresheafError,
)
from src.exact_arith import BlockMatrix, GaussianRational
from src.presheaf_morphisms import BaseMap, PresheafMorphism, make_presheaf_morphism, naturality_witness
from src.spectral_presheaf import SpectralPresheaf, build_presheaf
from src.star_algebra import StarAlgebra, UnitalStarHom, verify_hom

logger = logging.getLogger(__name__)

class AlgebraModel(BaseModel):
    shape: List[int] = Field(min_length=1)
    label: Optional[str] = None


class ElementModel(BaseModel):
    shape: List[int] = Field(min_length=1, description="Block sizes of the algebra")
    entries: List[str] = Field(description="Row-major entries of each block, block after block")


class MatrixModel(BaseModel):
    shape: List[int] = Field(min_length=2, max_length=2, description="[rows, columns]")
    entries: List[str] = Field(description="Row-major entries")


class ContextModel(BaseModel):
    name: Optional[str] = None
    atoms: List[ElementModel] = Field(min_length=1)


class PosetModel(BaseModel):
    kind: Literal['poset'] = 'poset'
    algebra: AlgebraModel
    contexts: List[ContextModel] = Field(min_length=1)
    covers: Optional[List[List[int]]] = Field(
        default=None, description="covers[i] lists the contexts covering context i; recomputed and compared on load"
    )


class GeneratorContextModel(BaseModel):
    name: str
    observables: List[str] = Field(min_length=1)


class GeneratedFamilyModel(BaseModel):
    kind: Literal['generated']
    name: str
    description: str = ""
    algebra: AlgebraModel
    observables: Dict[str, ElementModel]
    contexts: List[GeneratorContextModel] = Field(min_length=1)
    expected: Dict[str, int] = Field(default_factory=dict)


class PartitionFamilyModel(BaseModel):
    kind: Literal['partitions']
    n: int = Field(ge=1)
    partitions: List[List[List[int]]] = Field(min_length=1)
    expected: Dict[str, int] = Field(default_factory=dict)


class RestrictionModel(BaseModel):
    small: int
    big: int
    table: List[int]


class PresheafModel(BaseModel):
    kind: Literal['presheaf']
    poset: PosetModel
    components: List[int]
    restrictions: List[RestrictionModel]


class HomModel(BaseModel):
    kind: Literal['hom']
    name: str = ""
    source: AlgebraModel
    target: AlgebraModel
    matrix: MatrixModel = Field(description="Matrix on coordinates: target.dimension rows, source.dimension columns")


class MorphismModel(BaseModel):
    kind: Literal['presheaf_morphism']
    source_poset: PosetModel = Field(description="Poset of the algebra whose presheaf is the codomain")
    target_poset: PosetModel
    base: List[int]
    components: List[List[int]]


Document = Annotated[
    Union[PosetModel, GeneratedFamilyModel, PartitionFamilyModel, PresheafModel, HomModel, MorphismModel],
    Field(discriminator='kind'),
]
_DOCUMENT = TypeAdapter(Document)


# scalars and elements

def format_scalar(x: GaussianRational) -> str:
    """Shortest form GaussianRational.parse reads back: "3/4", "-i", "2 i", "1-1/2 i"."""
    if x.im == 0:
        return str(x.re)
    if x.re == 0:
        if x.im == 1:
            return "i"
        if x.im == -1:
            return "-i"
        return f"{x.im} i"
    return str(x)


def encode_element(a: BlockMatrix) -> Dict[str, Any]:
    return {'shape': list(a.shape), 'entries': [format_scalar(x) for x in a.coordinates()]}


def _parse_entries(entries: List[str], where: str) -> List[GaussianRational]:
    try:
        return [GaussianRational.parse(x) for x in entries]
    except SchemaError as exc:
        raise SchemaError(f"{where}: {exc}", witness=where) from exc


def decode_element(algebra: StarAlgebra, model: ElementModel, where: str) -> BlockMatrix:
    if tuple(model.shape) != algebra.shape:
        raise ShapeMismatchError(f"{where}: shape {model.shape} does not match algebra shape {list(algebra.shape)}",
                                 witness={'at': where, 'shape': model.shape})
    coords = _parse_entries(model.entries, where)
    try:
        return BlockMatrix.from_coordinates(algebra.shape, coords)
    except SpectralPresheafError as exc:
        raise type(exc)(f"{where}: {exc}", witness={'at': where, 'detail': exc.witness}) from exc


def _algebra(model: AlgebraModel) -> StarAlgebra:
    return StarAlgebra(tuple(model.shape), model.label or "")


def _algebra_model(algebra: StarAlgebra) -> Dict[str, Any]:
    return {'shape': list(algebra.shape), 'label': algebra.label}


# posets

def _check_closed(poset: ContextPoset):
    if trivial_context(poset.algebra) not in poset:
        raise CorruptPosetError("Poset does not contain the trivial context", witness=None)
    for i in range(len(poset)):
        for j in range(i + 1, len(poset)):
            if intersect(poset.contexts[i], poset.contexts[j]) not in poset:
                raise CorruptPosetError(f"Meet of contexts {i} and {j} is not stored", witness=[i, j])


def _poset(model: PosetModel) -> ContextPoset:
    algebra = _algebra(model.algebra)
    contexts = []
    for c, context in enumerate(model.contexts):
        atoms = [decode_element(algebra, a, f"contexts[{c}].atoms[{k}]") for k, a in enumerate(context.atoms)]
        try:
            contexts.append(Context.of(algebra, atoms))
        except SpectralPresheafError as exc:
            raise type(exc)(f"contexts[{c}]: {exc}", witness={'context': c, 'detail': exc.witness}) from exc
    if len(set(contexts)) != len(contexts):
        raise CorruptPosetError("A context is listed twice", witness=len(contexts))

    poset = ContextPoset.from_contexts(algebra, contexts)
    _check_closed(poset)
    if model.covers is not None:
        if len(model.covers) != len(contexts) or any(not 0 <= k < len(contexts) for row in model.covers for k in row):
            raise CorruptPosetError("Covers must list one row per context with indices of listed contexts",
                                    witness=len(model.covers))
        position = [poset.index(c) for c in contexts]
        stored = {(position[i], position[j]) for i, row in enumerate(model.covers) for j in row}
        computed = set(poset.covers())
        if stored != computed:
            missing = sorted(computed - stored)
            extra = sorted(stored - computed)
            raise CorruptPosetError("Stored covers disagree with inclusion of atoms",
                                    witness={'missing': missing[:5], 'extra': extra[:5]})
    return poset


def _cover_rows(poset: ContextPoset) -> List[List[int]]:
    rows: List[List[int]] = [[] for _ in range(len(poset))]
    for small, big in poset.covers():
        rows[small].append(big)
    return rows


def _poset_document(poset: ContextPoset) -> Dict[str, Any]:
    return {
        'kind': 'poset',
        'algebra': _algebra_model(poset.algebra),
        'contexts': [{'atoms': [encode_element(a) for a in c.atoms]} for c in poset.contexts],
        'covers': _cover_rows(poset),
    }


# other kinds

def _generated(model: GeneratedFamilyModel) -> GeneratedFamily:
    algebra = _algebra(model.algebra)
    observables = tuple(
        (name, decode_element(algebra, blocks, f"observables.{name}"))
        for name, blocks in model.observables.items()
    )
    for context in model.contexts:
        unknown = [o for o in context.observables if o not in model.observables]
        if unknown:
            raise SchemaError(f"Context {context.name} names unknown observables {unknown}", witness=unknown)
    family = GeneratedFamily(
        name=model.name,
        description=model.description,
        algebra=algebra,
        observables=observables,
        generator_names=tuple((c.name, tuple(c.observables)) for c in model.contexts),
        expected=tuple(sorted(model.expected.items())),
    )
    family.generators()
    return family


def _generated_document(family: GeneratedFamily) -> Dict[str, Any]:
    return {
        'kind': 'generated',
        'name': family.name,
        'description': family.description,
        'algebra': _algebra_model(family.algebra),
        'observables': {name: encode_element(a) for name, a in family.observables},
        'contexts': [{'name': name, 'observables': list(names)} for name, names in family.generator_names],
        'expected': dict(family.expected),
    }


def _partitions(model: PartitionFamilyModel) -> PartitionFamily:
    for p, partition in enumerate(model.partitions):
        points = sorted(x for block in partition for x in block)
        if points != list(range(model.n)) or any(not block for block in partition):
            raise SchemaError(f"partitions[{p}] is not a set partition of 0..{model.n - 1}", witness=p)
    family = PartitionFamily(
        n=model.n,
        partitions=tuple(tuple(tuple(sorted(block)) for block in partition) for partition in model.partitions),
        expected=tuple(sorted(model.expected.items())),
    )
    _check_closed(family.poset())
    return family


def _partitions_document(family: PartitionFamily) -> Dict[str, Any]:
    return {
        'kind': 'partitions',
        'n': family.n,
        'partitions': [[list(block) for block in p] for p in family.partitions],
        'expected': dict(family.expected),
    }


def _presheaf(model: PresheafModel) -> SpectralPresheaf:
    sigma = build_presheaf(_poset(model.poset))
    stored = {(r.small, r.big): tuple(r.table) for r in model.restrictions}
    if tuple(model.components) != sigma.components:
        raise CorruptPosetError("Stored component sizes disagree with the poset",
                                witness={'stored': model.components, 'computed': list(sigma.components)})
    if stored != sigma.restrictions:
        differing = sorted(k for k in set(stored) | set(sigma.restrictions)
                           if stored.get(k) != sigma.restrictions.get(k))
        raise CorruptPosetError("Stored restriction maps disagree with the poset", witness=list(differing[0]))
    return sigma


def _presheaf_document(sigma: SpectralPresheaf) -> Dict[str, Any]:
    return {
        'kind': 'presheaf',
        'poset': _poset_document(sigma.poset),
        'components': list(sigma.components),
        'restrictions': [{'small': s, 'big': b, 'table': list(t)} for (s, b), t in sorted(sigma.restrictions.items())],
    }


def _hom(model: HomModel) -> UnitalStarHom:
    source, target = _algebra(model.source), _algebra(model.target)
    rows, columns = model.matrix.shape
    if (rows, columns) != (target.dimension, source.dimension) or len(model.matrix.entries) != rows * columns:
        raise ShapeMismatchError(
            f"matrix must be {target.dimension}x{source.dimension} with {target.dimension * source.dimension} entries",
            witness={'shape': model.matrix.shape, 'entries': len(model.matrix.entries)},
        )
    entries = _parse_entries(model.matrix.entries, "matrix")
    matrix = tuple(tuple(entries[i * columns:(i + 1) * columns]) for i in range(rows))
    h = UnitalStarHom(source, target, matrix, model.name)
    if not verify_hom(h):
        raise NotAnIsomorphismError(f"Map {model.name or '(unnamed)'} is not a unital *-homomorphism",
                                    witness=model.name)
    return h


def _hom_document(h: UnitalStarHom) -> Dict[str, Any]:
    return {
        'kind': 'hom',
        'name': h.name,
        'source': _algebra_model(h.source),
        'target': _algebra_model(h.target),
        'matrix': {
            'shape': [h.target.dimension, h.source.dimension],
            'entries': [format_scalar(x) for row in h.matrix for x in row],
        },
    }


def _morphism(model: MorphismModel) -> PresheafMorphism:
    base = BaseMap(_poset(model.source_poset), _poset(model.target_poset), tuple(model.base))
    if not base.is_monotone():
        raise CorruptPosetError("Base map is not monotone", witness=list(base.table))
    m = make_presheaf_morphism(base, model.components)
    witness = naturality_witness(m)
    if witness is not None:
        raise CorruptPosetError("Presheaf morphism is not natural", witness=witness)
    return m


def _morphism_document(m: PresheafMorphism) -> Dict[str, Any]:
    return {
        'kind': 'presheaf_morphism',
        'source_poset': _poset_document(m.base.source),
        'target_poset': _poset_document(m.base.target),
        'base': list(m.base.table),
        'components': [list(t) for t in m.components],
    }


_LOADERS = {
    'poset': _poset,
    'generated': _generated,
    'partitions': _partitions,
    'presheaf': _presheaf,
    'hom': _hom,
    'presheaf_morphism': _morphism,
}

_DOCUMENTS = (
    (ContextPoset, _poset_document),
    (GeneratedFamily, _generated_document),
    (PartitionFamily, _partitions_document),
    (SpectralPresheaf, _presheaf_document),
    (UnitalStarHom, _hom_document),
    (PresheafMorphism, _morphism_document),
)


def loads(text: str, source: str = "<string>"):
    """
    Parse and validate one document.

    Raises:
        SchemaError: malformed JSON (with line/column) or schema violation (with field path)
        SpectralPresheafError: the document parses but violates an invariant
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          witness={'line': exc.lineno, 'column': exc.colno}) from exc
    try:
        model = _DOCUMENT.validate_python(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first['loc'])
        raise SchemaError(f"{source}: {location}: {first['msg']}",
                          witness={'field': location, 'errors': exc.error_count()}) from exc
    return _LOADERS[model.kind](model)


def load(path: Union[str, Path]):
    path = Path(path)
    logger.info(f"[IO] loading {path}")
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or exc}", witness={'path': str(path)}) from exc
    return loads(text, source=str(path))


def to_document(obj) -> Dict[str, Any]:
    for kind, encode in _DOCUMENTS:
        if isinstance(obj, kind):
            return encode(obj)
    raise ObjectMismatchError(f"Cannot serialise {type(obj).__name__}", witness=type(obj).__name__)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_document(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save(path: Union[str, Path], obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding='utf-8')
    logger.info(f"[IO] wrote {path}")


class Workspace:
    """
    Named algebras, posets, presheaves and morphisms for one session.

    Objects are keyed by label; a label is bound once. Access is guarded by
    a lock so searches running in worker threads can share one workspace.
    """

    def __init__(self):
        self._objects: Dict[str, Any] = {}
        self._lock = threading.Lock()

    def put(self, label: str, obj) -> str:
        with self._lock:
            existing = self._objects.get(label)
            if existing is not None and existing != obj:
                raise ObjectMismatchError(f"Label {label!r} is already bound to a different object", witness=label)
            self._objects[label] = obj
        return label

    def get(self, label: str):
        with self._lock:
            if label not in self._objects:
                raise ObjectMismatchError(f"Nothing stored under {label!r}", witness=label)
            return self._objects[label]

    def labels(self) -> List[str]:
        with self._lock:
            return sorted(self._objects)

    def load(self, label: str, path: Union[str, Path]):
        return self.get(self.put(label, load(path)))

    def fetch(self, path: Union[str, Path]):
        """The object stored in path, read once per workspace and then served by label."""
        label = str(Path(path))
        with self._lock:
            if label in self._objects:
                return self._objects[label]
        return self.load(label, path)

    def save(self, label: str, path: Union[str, Path]):
        save(path, self.get(label))
