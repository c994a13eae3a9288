# Copyright 2024 The schemaforge Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
# with the License. A copy of the License is located at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# or in the "LICENSE.txt" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
# OR CONDITIONS OF ANY KIND, express or implied. See the License for the specific language governing permissions and
# limitations under the License.

"""
In-memory representation of schema elements.

Every definition is a frozen dataclass. Ordered maps are plain dicts whose insertion order is the document order;
they are never mutated after construction, derived schemas are built with dataclasses.replace.
"""

import functools
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple, Union

import yaml
from common.utils import SchemaforgeError
from schemaforge.common import PREFIX_PATTERN, is_absolute_uri, is_valid_name, split_curie

logger = logging.getLogger(__name__)

BUILTIN_SCHEMA_ID = "https://w3id.org/linkml/types"
BUILTIN_SCHEMA_NAME = "types"
BUILTIN_IMPORT_REFERENCES = ("linkml:types",)
LINKML_PREFIX = "linkml"
LINKML_BASE = "https://w3id.org/linkml/"
XSD_PREFIX = "xsd"
XSD_BASE = "http://www.w3.org/2001/XMLSchema#"
# Effective range of a slot when neither the slot nor the schema names one.
FALLBACK_RANGE = "string"

Number = Union[int, float]


class SchemaStructureError(SchemaforgeError):
    """A schema violates one of the metamodel invariants."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        message = self.problems[0]
        if len(self.problems) > 1:
            message += f" (and {len(self.problems) - 1} more problem(s))"
        super().__init__(message)


class BaseKind(Enum):
    STRING = "string"
    INTEGER = "integer"
    FLOAT = "float"
    BOOLEAN = "boolean"
    URI = "uri"
    CURIE = "curie"
    DATE = "date"
    DATETIME = "datetime"

    def __str__(self):
        return str(self.value)

    @property
    def xsd_local_name(self):
        return {
            BaseKind.STRING: "string",
            BaseKind.INTEGER: "integer",
            BaseKind.FLOAT: "float",
            BaseKind.BOOLEAN: "boolean",
            BaseKind.URI: "anyURI",
            BaseKind.CURIE: "string",
            BaseKind.DATE: "date",
            BaseKind.DATETIME: "dateTime",
        }[self]


class ElementKind(Enum):
    CLASS = "class"
    SLOT = "slot"
    ENUM = "enum"
    TYPE = "type"

    def __str__(self):
        return str(self.value)


class MappingPredicate(Enum):
    EXACT = "exact"
    CLOSE = "close"
    BROAD = "broad"
    NARROW = "narrow"
    RELATED = "related"

    def __str__(self):
        return str(self.value)

    @property
    def key(self):
        """Document key holding mappings of this predicate, e.g. exact_mappings."""
        return f"{self.value}_mappings"

    @property
    def skos_curie(self):
        return f"skos:{self.value}Match"


@dataclass(frozen=True)
class Mapping:
    predicate: MappingPredicate
    target: str


@dataclass(frozen=True)
class PermissibleValue:
    text: str
    description: Optional[str] = None
    meaning: Optional[str] = None


@dataclass(frozen=True)
class EnumDefinition:
    name: str
    description: Optional[str] = None
    permissible_values: Dict[str, PermissibleValue] = field(default_factory=dict)
    from_schema: Optional[str] = None


@dataclass(frozen=True)
class TypeDefinition:
    name: str
    base: BaseKind
    pattern: Optional[str] = None
    description: Optional[str] = None
    from_schema: Optional[str] = None


@dataclass(frozen=True)
class SlotDefinition:
    """
    A slot, or a partial slot overlay when used in slot_usage.

    Boolean and scalar fields are None when the document does not set them, so that overlays only override
    what they state. Absent booleans mean false once the slot is induced.
    """

    name: str
    description: Optional[str] = None
    is_a: Optional[str] = None
    range: Optional[str] = None
    required: Optional[bool] = None
    multivalued: Optional[bool] = None
    identifier: Optional[bool] = None
    pattern: Optional[str] = None
    minimum_value: Optional[Number] = None
    maximum_value: Optional[Number] = None
    unit: Optional[str] = None
    slot_uri: Optional[str] = None
    examples: Tuple[str, ...] = ()
    mappings: Tuple[Mapping, ...] = ()
    from_schema: Optional[str] = None


@dataclass(frozen=True)
class ClassDefinition:
    name: str
    description: Optional[str] = None
    is_a: Optional[str] = None
    mixins: Tuple[str, ...] = ()
    abstract: bool = False
    slots: Tuple[str, ...] = ()
    attributes: Dict[str, SlotDefinition] = field(default_factory=dict)
    slot_usage: Dict[str, SlotDefinition] = field(default_factory=dict)
    class_uri: Optional[str] = None
    mappings: Tuple[Mapping, ...] = ()
    from_schema: Optional[str] = None

    @property
    def parents(self):
        """Direct parents, is_a first then mixins in declaration order."""
        return ((self.is_a,) if self.is_a else ()) + tuple(self.mixins)

    @property
    def own_slot_names(self):
        """Slot names declared on this class itself, slots list first then attributes."""
        names = list(self.slots)
        names.extend(name for name in self.attributes if name not in names)
        return names


@dataclass(frozen=True)
class SchemaDefinition:
    id: str
    name: str
    title: Optional[str] = None
    license: Optional[str] = None
    version: Optional[str] = None
    prefixes: Dict[str, str] = field(default_factory=dict)
    default_prefix: Optional[str] = None
    default_range: Optional[str] = None
    imports: Tuple[str, ...] = ()
    classes: Dict[str, ClassDefinition] = field(default_factory=dict)
    slots: Dict[str, SlotDefinition] = field(default_factory=dict)
    enums: Dict[str, EnumDefinition] = field(default_factory=dict)
    types: Dict[str, TypeDefinition] = field(default_factory=dict)
    diagnostics: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def effective_default_range(self):
        return self.default_range or FALLBACK_RANGE

    def element_maps(self):
        return (
            (ElementKind.CLASS, self.classes),
            (ElementKind.SLOT, self.slots),
            (ElementKind.ENUM, self.enums),
            (ElementKind.TYPE, self.types),
        )

    def element_kind(self, name) -> Optional[ElementKind]:
        for kind, elements in self.element_maps():
            if name in elements:
                return kind
        return None

    def get_element(self, name):
        for _, elements in self.element_maps():
            if name in elements:
                return elements[name]
        return None

    def element_names(self) -> Iterator[str]:
        for _, elements in self.element_maps():
            yield from elements


@functools.lru_cache(maxsize=None)
def builtin_schema() -> SchemaDefinition:
    """Return the schema every schema implicitly imports: one type per base kind plus the standard prefixes."""
    descriptions = {
        BaseKind.STRING: "A character string.",
        BaseKind.INTEGER: "An integer.",
        BaseKind.FLOAT: "A real number.",
        BaseKind.BOOLEAN: "A binary (true or false) value.",
        BaseKind.URI: "A complete URI.",
        BaseKind.CURIE: "A compact URI of the form prefix:local.",
        BaseKind.DATE: "A date (year, month and day) in ISO 8601 form.",
        BaseKind.DATETIME: "A date and time in ISO 8601 form.",
    }
    types = {
        kind.value: TypeDefinition(
            name=kind.value, base=kind, description=descriptions[kind], from_schema=BUILTIN_SCHEMA_ID
        )
        for kind in BaseKind
    }
    return SchemaDefinition(
        id=BUILTIN_SCHEMA_ID,
        name=BUILTIN_SCHEMA_NAME,
        title="Built-in types",
        prefixes={LINKML_PREFIX: LINKML_BASE, XSD_PREFIX: XSD_BASE},
        default_prefix=LINKML_PREFIX,
        types=types,
    )


def is_builtin_reference(reference):
    return reference in BUILTIN_IMPORT_REFERENCES or reference == BUILTIN_SCHEMA_ID


def _iter_slot_definitions(schema):
    """Yield (location, slot) for global slots, attributes and slot_usage overlays."""
    for name, slot in schema.slots.items():
        yield f"slots/{name}", slot
    for class_name, class_def in schema.classes.items():
        for name, slot in class_def.attributes.items():
            yield f"classes/{class_name}/attributes/{name}", slot
        for name, slot in class_def.slot_usage.items():
            yield f"classes/{class_name}/slot_usage/{name}", slot


def _check_pattern(location, pattern, problems):
    if pattern is None:
        return
    try:
        re.compile(pattern)
    except re.error as e:
        problems.append(f"{location}: invalid pattern '{pattern}': {e}")


def check_structure(schema: SchemaDefinition):
    """
    Check the invariants a schema must satisfy on its own, before imports are resolved.

    :raise SchemaStructureError: listing every violated invariant
    """
    problems = []
    if not is_absolute_uri(schema.id):
        problems.append(f"schema id '{schema.id}' is not an absolute URI")
    if not isinstance(schema.name, str) or not PREFIX_PATTERN.fullmatch(schema.name):
        problems.append(f"schema name '{schema.name}' is not a valid name")
    for prefix, base in schema.prefixes.items():
        if not PREFIX_PATTERN.fullmatch(prefix):
            problems.append(f"prefix '{prefix}' is not a valid prefix name")
        if not is_absolute_uri(base):
            problems.append(f"prefix '{prefix}' maps to '{base}', which is not an absolute URI base")

    seen = {}
    for kind, elements in schema.element_maps():
        for name, element in elements.items():
            if not is_valid_name(name):
                problems.append(f"{kind} name '{name}' does not match the identifier grammar")
            if element.name != name:
                problems.append(f"{kind} '{name}' is registered under a different name '{element.name}'")
            if name in seen:
                problems.append(f"element name '{name}' is used by both a {seen[name]} and a {kind}")
            else:
                seen[name] = kind

    for class_name, class_def in schema.classes.items():
        for name in list(class_def.attributes) + list(class_def.slot_usage) + list(class_def.slots):
            if not is_valid_name(name):
                problems.append(f"classes/{class_name}: slot name '{name}' does not match the identifier grammar")

    for location, slot in _iter_slot_definitions(schema):
        if (
            slot.minimum_value is not None
            and slot.maximum_value is not None
            and slot.minimum_value > slot.maximum_value
        ):
            problems.append(
                f"{location}: minimum_value {slot.minimum_value} is greater than maximum_value {slot.maximum_value}"
            )
        _check_pattern(location, slot.pattern, problems)

    for enum_name, enum_def in schema.enums.items():
        for text, value in enum_def.permissible_values.items():
            if value.text != text:
                problems.append(f"enums/{enum_name}: permissible value '{text}' is registered as '{value.text}'")
            if value.meaning is not None and split_curie(value.meaning) is None:
                problems.append(f"enums/{enum_name}/{text}: meaning '{value.meaning}' is not a CURIE")

    for type_name, type_def in schema.types.items():
        if not isinstance(type_def.base, BaseKind):
            problems.append(f"types/{type_name}: base '{type_def.base}' is not a base kind")
        _check_pattern(f"types/{type_name}", type_def.pattern, problems)

    if problems:
        raise SchemaStructureError(problems)
    return schema


def _find_cycle(graph: Dict[str, Tuple[str, ...]]) -> Optional[List[str]]:
    """Return one cycle path of a directed graph (first node repeated at the end), or None."""
    state = {}

    def visit(node, path):
        state[node] = "visiting"
        for child in graph.get(node, ()):
            if state.get(child) == "visiting":
                return path[path.index(child) :] + [child]
            if child not in state:
                cycle = visit(child, path + [child])
                if cycle:
                    return cycle
        state[node] = "done"
        return None

    for start in graph:
        if start not in state:
            cycle = visit(start, [start])
            if cycle:
                return cycle
    return None


def check_references(schema: SchemaDefinition):
    """
    Check the invariants that need the whole import closure: references resolve and hierarchies are acyclic.

    :raise SchemaStructureError: listing every violated invariant
    """
    problems = []
    for class_name, class_def in schema.classes.items():
        for parent in class_def.parents:
            if parent not in schema.classes:
                problems.append(f"classes/{class_name}: parent class '{parent}' is not defined")
        for slot_name in class_def.slots:
            if slot_name not in schema.slots and slot_name not in class_def.attributes:
                problems.append(f"classes/{class_name}: slot '{slot_name}' is not defined")
    for slot_name, slot in schema.slots.items():
        if slot.is_a and slot.is_a not in schema.slots:
            problems.append(f"slots/{slot_name}: parent slot '{slot.is_a}' is not defined")

    for location, slot in _iter_slot_definitions(schema):
        if slot.range is not None and schema.element_kind(slot.range) in (None, ElementKind.SLOT):
            problems.append(f"{location}: range '{slot.range}' is not a type, class or enum")
    if schema.default_range is not None and schema.element_kind(schema.default_range) in (None, ElementKind.SLOT):
        problems.append(f"default_range '{schema.default_range}' is not a type, class or enum")

    for enum_name, enum_def in schema.enums.items():
        for text, value in enum_def.permissible_values.items():
            curie = split_curie(value.meaning) if value.meaning else None
            if curie and curie[0] not in schema.prefixes:
                problems.append(f"enums/{enum_name}/{text}: meaning '{value.meaning}' uses undeclared prefix")

    class_cycle = _find_cycle(
        {name: tuple(p for p in c.parents if p in schema.classes) for name, c in schema.classes.items()}
    )
    if class_cycle:
        problems.append(f"class hierarchy has a cycle: {' -> '.join(class_cycle)}")
    slot_cycle = _find_cycle(
        {name: (s.is_a,) if s.is_a in schema.slots else () for name, s in schema.slots.items()}
    )
    if slot_cycle:
        problems.append(f"slot hierarchy has a cycle: {' -> '.join(slot_cycle)}")

    if problems:
        raise SchemaStructureError(problems)
    return schema


# Canonical key order of the text format.
SCHEMA_KEYS = (
    "id",
    "name",
    "title",
    "license",
    "version",
    "prefixes",
    "default_prefix",
    "default_range",
    "imports",
    "classes",
    "slots",
    "enums",
    "types",
)
SLOT_KEYS = (
    "description",
    "is_a",
    "range",
    "required",
    "multivalued",
    "identifier",
    "pattern",
    "minimum_value",
    "maximum_value",
    "unit",
    "slot_uri",
    "examples",
)
CLASS_KEYS = ("description", "is_a", "mixins", "abstract", "slots", "attributes", "slot_usage", "class_uri")
ENUM_KEYS = ("description", "permissible_values")
PERMISSIBLE_VALUE_KEYS = ("description", "meaning")
TYPE_KEYS = ("base", "pattern", "description")
MAPPING_KEYS = tuple(predicate.key for predicate in MappingPredicate)


def _mappings_to_dict(mappings, out):
    for predicate in MappingPredicate:
        targets = [mapping.target for mapping in mappings if mapping.predicate == predicate]
        if targets:
            out[predicate.key] = targets


def slot_to_dict(slot: SlotDefinition):
    out = {}
    for key in SLOT_KEYS:
        value = getattr(slot, key)
        if key == "examples":
            if value:
                out[key] = list(value)
        elif value is not None:
            out[key] = value
    _mappings_to_dict(slot.mappings, out)
    return out


def class_to_dict(class_def: ClassDefinition):
    out = {}
    for key in CLASS_KEYS:
        value = getattr(class_def, key)
        if key in ("mixins", "slots"):
            if value:
                out[key] = list(value)
        elif key in ("attributes", "slot_usage"):
            if value:
                out[key] = {name: slot_to_dict(slot) for name, slot in value.items()}
        elif key == "abstract":
            if value:
                out[key] = True
        elif value is not None:
            out[key] = value
    _mappings_to_dict(class_def.mappings, out)
    return out


def enum_to_dict(enum_def: EnumDefinition):
    out = {}
    if enum_def.description is not None:
        out["description"] = enum_def.description
    values = {}
    for text, value in enum_def.permissible_values.items():
        values[text] = {key: getattr(value, key) for key in PERMISSIBLE_VALUE_KEYS if getattr(value, key) is not None}
    out["permissible_values"] = values
    return out


def type_to_dict(type_def: TypeDefinition):
    out = {"base": type_def.base.value}
    if type_def.pattern is not None:
        out["pattern"] = type_def.pattern
    if type_def.description is not None:
        out["description"] = type_def.description
    return out


def schema_to_dict(schema: SchemaDefinition):
    """Convert a schema into plain data in canonical key order, omitting unset and default-valued fields."""
    out = {}
    for key in SCHEMA_KEYS:
        value = getattr(schema, key)
        if key == "classes":
            converted = {name: class_to_dict(c) for name, c in value.items()}
        elif key == "slots":
            converted = {name: slot_to_dict(s) for name, s in value.items()}
        elif key == "enums":
            converted = {name: enum_to_dict(e) for name, e in value.items()}
        elif key == "types":
            converted = {name: type_to_dict(t) for name, t in value.items()}
        elif key == "prefixes":
            converted = dict(value)
        elif key == "imports":
            converted = list(value)
        else:
            converted = value
        if converted is None or (isinstance(converted, (dict, list)) and not converted):
            continue
        out[key] = converted
    return out


def dump_yaml(data):
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True, default_flow_style=False, width=120)


def serialize_schema(schema: SchemaDefinition) -> str:
    """Serialize a schema to the canonical text format; parse_schema is its inverse."""
    return dump_yaml(schema_to_dict(schema))
