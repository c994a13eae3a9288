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
Compilation of a merged schema.

Inheritance is flattened into per-class induced slots and every element gets an expanded URI. Multiple inheritance
is linearized depth-first with is_a before mixins, keeping the first occurrence of each class (this is not C3).
"""

import collections
import dataclasses
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple

from common.utils import SchemaforgeError
from schemaforge.common import is_absolute_uri, split_curie
from schemaforge.loader import ImportResolver, PrefixMap, build_prefix_map, parse_schema_file, resolve_imports
from schemaforge.metamodel import (
    LINKML_BASE,
    XSD_BASE,
    BaseKind,
    ElementKind,
    Mapping,
    Number,
    SchemaDefinition,
    SlotDefinition,
    builtin_schema,
)

log = logging.getLogger(__name__)


class InductionError(SchemaforgeError):
    """A class cannot be compiled into induced slots."""

    pass


class UnknownClassError(SchemaforgeError):
    """A class name does not name a class of the schema."""

    def __init__(self, class_name):
        self.class_name = class_name
        super().__init__(f"unknown class '{class_name}'")


class CurieError(SchemaforgeError):
    """A CURIE is malformed or uses an undeclared prefix."""

    pass


class InheritanceLabel(Enum):
    DIRECT = "direct"
    INHERITED = "inherited"
    OVERRIDDEN = "overridden"

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class InducedSlot:
    """The effective slot a class has once inheritance, attributes and slot_usage are merged."""

    name: str
    owner_class: str
    effective_range: str
    range_kind: ElementKind
    required: bool = False
    multivalued: bool = False
    identifier: bool = False
    base_kind: Optional[BaseKind] = None
    pattern: Optional[str] = None
    type_pattern: Optional[str] = None
    minimum_value: Optional[Number] = None
    maximum_value: Optional[Number] = None
    slot_uri: Optional[str] = None
    slot_uri_expanded: Optional[str] = None
    description: Optional[str] = None
    unit: Optional[str] = None
    examples: Tuple[str, ...] = ()
    mappings: Tuple[Mapping, ...] = ()
    permissible_values: Tuple[str, ...] = ()
    inheritance_label: InheritanceLabel = InheritanceLabel.DIRECT
    defined_in: Optional[str] = None
    from_schema: Optional[str] = None

    @property
    def patterns(self):
        """Patterns a value must fully match, type pattern first."""
        return tuple(pattern for pattern in (self.type_pattern, self.pattern) if pattern is not None)

    @property
    def minimum_cardinality(self):
        return 1 if self.required else 0

    @property
    def maximum_cardinality(self):
        """Upper bound on the number of values, None when unbounded."""
        return None if self.multivalued else 1


@dataclass(frozen=True)
class CompiledSchema:
    source: SchemaDefinition
    prefix_map: PrefixMap
    induced: Dict[str, Tuple[InducedSlot, ...]]
    ancestors: Dict[str, Tuple[str, ...]]
    expanded_uris: Dict[str, str]
    diagnostics: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def name(self):
        return self.source.name

    def class_definition(self, class_name):
        try:
            return self.source.classes[class_name]
        except KeyError:
            raise UnknownClassError(class_name)

    def instantiable_classes(self) -> List[str]:
        return [name for name, class_def in self.source.classes.items() if not class_def.abstract]

    def slots_of(self, class_name) -> Tuple[InducedSlot, ...]:
        try:
            return self.induced[class_name]
        except KeyError:
            raise UnknownClassError(class_name)

    def identifier_slot(self, class_name) -> Optional[InducedSlot]:
        return next((slot for slot in self.slots_of(class_name) if slot.identifier), None)

    def descendants(self, class_name) -> List[str]:
        """Classes having class_name as a proper ancestor, in declaration order."""
        return [name for name, chain in self.ancestors.items() if class_name in chain[1:]]


class ContractedUri(NamedTuple):
    text: str
    passthrough: bool


def expand_curie(prefix_map, curie) -> str:
    """
    Expand prefix:local into the prefix base followed by the local part.

    :raise CurieError: when the text has no colon, an invalid prefix or an undeclared prefix
    """
    parts = split_curie(curie)
    if parts is None:
        raise CurieError(f"'{curie}' is not a CURIE")
    prefix, local = parts
    if prefix not in prefix_map:
        raise CurieError(f"'{curie}' uses undeclared prefix '{prefix}'")
    return prefix_map[prefix] + local


def expand_reference(prefix_map, value) -> str:
    """Expand a class_uri or slot_uri, which may already be an absolute URI."""
    parts = split_curie(value)
    if parts and parts[0] in prefix_map:
        return expand_curie(prefix_map, value)
    if is_absolute_uri(value) and "//" in value:
        return value
    return expand_curie(prefix_map, value)


def contract_uri(prefix_map, uri) -> ContractedUri:
    """Contract a URI with the longest matching declared base; an unmatched URI passes through unchanged."""
    best = None
    for prefix, base in prefix_map.items():
        if base and uri.startswith(base) and (best is None or len(base) > len(prefix_map[best])):
            best = prefix
    if best is None:
        return ContractedUri(uri, True)
    return ContractedUri(f"{best}:{uri[len(prefix_map[best]):]}", False)


def class_ancestors(schema: SchemaDefinition, class_name) -> List[str]:
    """
    Return the class followed by its ancestors.

    The walk is depth-first, is_a before mixins and mixins in declaration order; a class reached twice keeps its
    first position.
    """
    if class_name not in schema.classes:
        raise UnknownClassError(class_name)
    chain = []

    def visit(name, stack):
        if name in stack:
            raise InductionError(f"class hierarchy has a cycle: {' -> '.join(stack[stack.index(name):] + [name])}")
        if name in chain:
            return
        if name not in schema.classes:
            raise InductionError(f"class '{stack[-1]}' has unknown parent '{name}'")
        chain.append(name)
        for parent in schema.classes[name].parents:
            visit(parent, stack + [name])

    visit(class_name, [])
    return chain


def _parent_depths(schema, class_name):
    """Shortest distance from class_name to each of its ancestors."""
    depths = {class_name: 0}
    queue = collections.deque([class_name])
    while queue:
        current = queue.popleft()
        for parent in schema.classes[current].parents:
            if parent not in depths and parent in schema.classes:
                depths[parent] = depths[current] + 1
                queue.append(parent)
    return depths


_OVERLAY_FIELDS = tuple(
    slot_field.name
    for slot_field in dataclasses.fields(SlotDefinition)
    if slot_field.name not in ("name", "is_a", "from_schema")
)


def _stated_fields(slot: SlotDefinition):
    stated = {}
    for name in _OVERLAY_FIELDS:
        value = getattr(slot, name)
        if value is not None and value != ():
            stated[name] = value
    return stated


def _overlay(base: SlotDefinition, overlay: SlotDefinition) -> SlotDefinition:
    return dataclasses.replace(base, **_stated_fields(overlay))


def _global_slot(schema, name, owner):
    """A global slot with its is_a chain folded in, farthest ancestor first."""
    chain = []
    current = schema.slots.get(name)
    while current is not None:
        if current.name in (slot.name for slot in chain):
            raise InductionError(f"slot hierarchy has a cycle through '{current.name}'")
        chain.append(current)
        if current.is_a is None:
            break
        parent = schema.slots.get(current.is_a)
        if parent is None:
            raise InductionError(f"slot '{current.name}' has unknown parent slot '{current.is_a}'")
        current = parent
    if not chain:
        raise InductionError(f"class '{owner}' references unknown slot '{name}'")
    merged = chain[-1]
    for slot in reversed(chain[:-1]):
        merged = dataclasses.replace(
            _overlay(merged, slot), name=slot.name, is_a=slot.is_a, from_schema=slot.from_schema
        )
    return merged


def _default_base(schema: SchemaDefinition, prefix_map):
    if schema.default_prefix and schema.default_prefix in prefix_map:
        return prefix_map[schema.default_prefix]
    return schema.id if schema.id.endswith(("/", "#")) else f"{schema.id}/"


def default_uri(schema: SchemaDefinition, prefix_map, element) -> str:
    if element.from_schema == builtin_schema().id:
        return LINKML_BASE + element.name
    return _default_base(schema, prefix_map) + element.name.replace(" ", "_")


class _Inducer:
    def __init__(self, schema: SchemaDefinition, prefix_map=None):
        self.schema = schema
        self.prefix_map = prefix_map if prefix_map is not None else build_prefix_map(schema)
        self.warnings = []

    def warn(self, message):
        log.warning(message)
        self.warnings.append(message)

    def _base_definition(self, name, ancestors):
        """The nearest declaration wins: an attribute, or a slots-list reference to the global slot."""
        for class_name in ancestors:
            class_def = self.schema.classes[class_name]
            attribute = class_def.attributes.get(name)
            if attribute is None and name in class_def.slots and name in self.schema.slots:
                return _global_slot(self.schema, name, class_name), None
            if attribute is not None:
                if attribute.is_a:
                    inherited = _global_slot(self.schema, attribute.is_a, class_name)
                    attribute = dataclasses.replace(_overlay(inherited, attribute), name=name, is_a=attribute.is_a)
                return attribute, class_name
        return _global_slot(self.schema, name, ancestors[0]), None

    def _apply_overlays(self, class_name, slot_name, slot, ancestors, depths):
        by_depth = collections.defaultdict(list)
        for ancestor in ancestors:
            overlay = self.schema.classes[ancestor].slot_usage.get(slot_name)
            if overlay is not None:
                by_depth[depths[ancestor]].append((ancestor, overlay))
        for depth in sorted(by_depth, reverse=True):
            overlays = by_depth[depth]
            for index, (first_class, first) in enumerate(overlays):
                for second_class, second in overlays[index + 1 :]:
                    first_fields, second_fields = _stated_fields(first), _stated_fields(second)
                    for key in first_fields.keys() & second_fields.keys():
                        if first_fields[key] != second_fields[key]:
                            raise InductionError(
                                f"class '{class_name}': slot_usage for '{slot_name}' in '{first_class}' and "
                                f"'{second_class}' conflict on {key}"
                            )
            for _, overlay in overlays:
                slot = _overlay(slot, overlay)
        return slot

    def induce(self, class_name, ancestors=None) -> List[InducedSlot]:
        ancestors = ancestors or class_ancestors(self.schema, class_name)
        class_def = self.schema.classes[class_name]
        depths = _parent_depths(self.schema, class_name)

        names = []
        for ancestor in ancestors:
            for name in self.schema.classes[ancestor].own_slot_names:
                if name not in names:
                    names.append(name)
        for ancestor in ancestors:
            for name in self.schema.classes[ancestor].slot_usage:
                if name not in names:
                    raise InductionError(f"class '{ancestor}' has slot_usage for unreachable slot '{name}'")

        induced = []
        for name in names:
            base, defined_in = self._base_definition(name, ancestors)
            slot = self._apply_overlays(class_name, name, base, ancestors, depths)
            induced.append(self._resolve(class_name, class_def, slot, defined_in))

        identifiers = [slot.name for slot in induced if slot.identifier]
        if len(identifiers) > 1:
            raise InductionError(f"class '{class_name}' has more than one identifier slot: {', '.join(identifiers)}")
        log.debug("Induced %d slots for %s", len(induced), class_name)
        return induced

    def _resolve(self, class_name, class_def, slot: SlotDefinition, defined_in) -> InducedSlot:
        effective_range = slot.range or self.schema.effective_default_range
        range_kind = self.schema.element_kind(effective_range)
        if range_kind is None and effective_range in builtin_schema().types:
            # Unmerged schema: built-in types are always in scope.
            range_kind = ElementKind.TYPE
        if range_kind in (None, ElementKind.SLOT):
            raise InductionError(f"class '{class_name}': slot '{slot.name}' has unknown range '{effective_range}'")

        required = bool(slot.required)
        multivalued = bool(slot.multivalued)
        if slot.identifier:
            if slot.required is False:
                self.warn(f"class '{class_name}': identifier slot '{slot.name}' declared required: false, forced true")
            if slot.multivalued:
                self.warn(f"class '{class_name}': identifier slot '{slot.name}' declared multivalued, forced single")
            required, multivalued = True, False

        base_kind, type_pattern, permissible_values = None, None, ()
        if range_kind == ElementKind.TYPE:
            type_def = self.schema.types.get(effective_range) or builtin_schema().types[effective_range]
            base_kind, type_pattern = type_def.base, type_def.pattern
        elif range_kind == ElementKind.ENUM:
            permissible_values = tuple(self.schema.enums[effective_range].permissible_values)

        if slot.slot_uri:
            slot_uri_expanded = expand_reference(self.prefix_map, slot.slot_uri)
        else:
            slot_uri_expanded = _default_base(self.schema, self.prefix_map) + slot.name.replace(" ", "_")

        if slot.name in class_def.own_slot_names:
            label = InheritanceLabel.DIRECT
        elif slot.name in class_def.slot_usage:
            label = InheritanceLabel.OVERRIDDEN
        else:
            label = InheritanceLabel.INHERITED

        return InducedSlot(
            name=slot.name,
            owner_class=class_name,
            effective_range=effective_range,
            range_kind=range_kind,
            required=required,
            multivalued=multivalued,
            identifier=bool(slot.identifier),
            base_kind=base_kind,
            pattern=slot.pattern,
            type_pattern=type_pattern,
            minimum_value=slot.minimum_value,
            maximum_value=slot.maximum_value,
            slot_uri=slot.slot_uri,
            slot_uri_expanded=slot_uri_expanded,
            description=slot.description,
            unit=slot.unit,
            examples=slot.examples,
            mappings=slot.mappings,
            permissible_values=permissible_values,
            inheritance_label=label,
            defined_in=defined_in,
            from_schema=slot.from_schema,
        )


def induced_slots(schema: SchemaDefinition, class_name) -> List[InducedSlot]:
    """
    Return the induced slots of a class: own slots in declaration order, then inherited ones in ancestor order.

    :raise UnknownClassError: when the class does not exist
    :raise InductionError: on unknown slots or ranges, conflicting overlays or several identifier slots
    """
    return _Inducer(schema).induce(class_name)


def _expanded_uris(schema, prefix_map):
    uris = {}
    for name, class_def in schema.classes.items():
        uris[name] = (
            expand_reference(prefix_map, class_def.class_uri)
            if class_def.class_uri
            else default_uri(schema, prefix_map, class_def)
        )
    for name, slot in schema.slots.items():
        uris[name] = (
            expand_reference(prefix_map, slot.slot_uri) if slot.slot_uri else default_uri(schema, prefix_map, slot)
        )
    for class_def in schema.classes.values():
        for name, attribute in class_def.attributes.items():
            if name not in uris:
                uris[name] = (
                    expand_reference(prefix_map, attribute.slot_uri)
                    if attribute.slot_uri
                    else _default_base(schema, prefix_map) + name.replace(" ", "_")
                )
    for name, enum_def in schema.enums.items():
        uris[name] = default_uri(schema, prefix_map, enum_def)
    for name, type_def in schema.types.items():
        if type_def.from_schema == builtin_schema().id:
            uris[name] = XSD_BASE + type_def.base.xsd_local_name
        else:
            uris[name] = default_uri(schema, prefix_map, type_def)
    return uris


def compile_schema(schema: SchemaDefinition) -> CompiledSchema:
    """Compile a merged schema: ancestors and induced slots for every class plus expanded element URIs."""
    prefix_map = build_prefix_map(schema)
    inducer = _Inducer(schema, prefix_map)
    ancestors, induced = {}, {}
    try:
        for class_name in schema.classes:
            ancestors[class_name] = tuple(class_ancestors(schema, class_name))
            induced[class_name] = tuple(inducer.induce(class_name, list(ancestors[class_name])))
        expanded_uris = _expanded_uris(schema, prefix_map)
    except CurieError as e:
        raise InductionError(str(e)) from e
    log.info("Compiled schema %s: %d classes", schema.name, len(schema.classes))
    return CompiledSchema(
        source=schema,
        prefix_map=prefix_map,
        induced=induced,
        ancestors=ancestors,
        expanded_uris=expanded_uris,
        diagnostics=tuple(schema.diagnostics) + tuple(inducer.warnings),
    )


def load_schema(file_path, resolver: ImportResolver = None) -> CompiledSchema:
    """Parse a schema file, merge its imports and compile it."""
    schema = parse_schema_file(file_path)
    merged = resolve_imports(schema, resolver, base_dir=os.path.dirname(os.path.abspath(str(file_path))))
    return compile_schema(merged)
