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
Deterministic serializations of a compiled schema.

JSON outputs use sorted keys and 2-space indentation; every output is UTF-8 text with LF line endings and a trailing
newline.
"""

import copy
import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

from common.utils import SchemaforgeError
from schemaforge.common import CURIE_VALUE_PATTERN, DATE_VALUE_PATTERN, DATETIME_VALUE_PATTERN, URI_VALUE_PATTERN
from schemaforge.induction import CompiledSchema, InducedSlot, UnknownClassError
from schemaforge.metamodel import XSD_BASE, BaseKind, ElementKind

log = logging.getLogger(__name__)

JSON_SCHEMA_DRAFT = "http://json-schema.org/draft-07/schema#"
SQL_DIALECTS = ("generic", "sqlite")


class GeneratorError(SchemaforgeError):
    """A compiled schema cannot be rendered into the requested target."""

    pass


class GeneratorTarget(Enum):
    JSON_SCHEMA = "json-schema"
    SQL_DDL = "sql-ddl"
    JSONLD_CONTEXT = "context"
    DOCS = "docs"

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class GeneratorOptions:
    target: GeneratorTarget = GeneratorTarget.JSON_SCHEMA
    root_class: Optional[str] = None
    dialect: str = "generic"
    inline_depth: int = 0
    surrogate_keys: bool = True


def _dump_json(document):
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def anchored(pattern):
    """Whole-value anchoring; a bare $ would also accept one trailing newline, which fullmatch rejects."""
    return f"^(?:{pattern})(?!\\n)$"


_BASE_KIND_JSON = {
    BaseKind.STRING: ("string", None),
    BaseKind.INTEGER: ("integer", None),
    BaseKind.FLOAT: ("number", None),
    BaseKind.BOOLEAN: ("boolean", None),
    BaseKind.URI: ("string", URI_VALUE_PATTERN),
    BaseKind.CURIE: ("string", CURIE_VALUE_PATTERN),
    BaseKind.DATE: ("string", DATE_VALUE_PATTERN),
    BaseKind.DATETIME: ("string", DATETIME_VALUE_PATTERN),
}


class _JsonSchemaBuilder:
    def __init__(self, schema: CompiledSchema, options: GeneratorOptions):
        self.schema = schema
        self.options = options

    def _type_schema(self, slot: InducedSlot):
        json_type, base_pattern = _BASE_KIND_JSON[slot.base_kind]
        item = {"type": json_type}
        patterns = ([base_pattern] if base_pattern else []) + list(slot.patterns)
        if len(patterns) == 1:
            item["pattern"] = anchored(patterns[0])
        elif patterns:
            item["allOf"] = [{"pattern": anchored(pattern)} for pattern in patterns]
        if slot.minimum_value is not None:
            item["minimum"] = slot.minimum_value
        if slot.maximum_value is not None:
            item["maximum"] = slot.maximum_value
        return item

    def _class_reference(self, class_name, depth, visiting):
        class_def = self.schema.class_definition(class_name)
        if (depth > 0 or class_def.abstract) and class_name not in visiting:
            target = self.class_definition(class_name, depth - 1, visiting | {class_name})
        elif class_def.abstract:
            target = {"type": "object"}
        else:
            target = {"$ref": f"#/definitions/{class_name}"}
        if self.schema.identifier_slot(class_name) is not None:
            return {"anyOf": [target, {"type": "string"}]}
        return target

    def _value_schema(self, slot: InducedSlot, depth, visiting):
        if slot.range_kind == ElementKind.TYPE:
            return self._type_schema(slot)
        if slot.range_kind == ElementKind.ENUM:
            return {"$ref": f"#/definitions/{slot.effective_range}"}
        if slot.range_kind == ElementKind.CLASS:
            return self._class_reference(slot.effective_range, depth, visiting)
        raise GeneratorError(f"slot '{slot.name}' of {slot.owner_class} has unresolvable range {slot.effective_range}")

    def property_schema(self, slot: InducedSlot, depth, visiting):
        item = self._value_schema(slot, depth, visiting)
        if slot.multivalued:
            prop = {"type": "array" if slot.required else ["array", "null"], "items": item}
            if slot.required:
                prop["minItems"] = 1
        elif slot.required:
            prop = item
        elif isinstance(item.get("type"), str) and "$ref" not in item and "anyOf" not in item:
            prop = dict(item, type=[item["type"], "null"])
        else:
            prop = {"anyOf": [item, {"type": "null"}]}
        if slot.description:
            prop = dict(prop, description=slot.description)
        return prop

    def class_definition(self, class_name, depth=None, visiting=frozenset()):
        depth = self.options.inline_depth if depth is None else depth
        class_def = self.schema.class_definition(class_name)
        slots = self.schema.slots_of(class_name)
        definition = {
            "type": "object",
            "title": class_name,
            "properties": {slot.name: self.property_schema(slot, depth, visiting | {class_name}) for slot in slots},
            "additionalProperties": False,
        }
        required = [slot.name for slot in slots if slot.required]
        if required:
            definition["required"] = required
        if class_def.description:
            definition["description"] = class_def.description
        return definition

    def enum_definition(self, enum_name):
        enum_def = self.schema.source.enums[enum_name]
        definition = {"type": "string", "title": enum_name, "enum": list(enum_def.permissible_values)}
        meanings = [f"{value.text}: {value.meaning}" for value in enum_def.permissible_values.values() if value.meaning]
        description_lines = ([enum_def.description] if enum_def.description else []) + meanings
        if description_lines:
            definition["description"] = "\n".join(description_lines)
        return definition

    def document(self):
        root_class = self.options.root_class
        if root_class is not None and root_class not in self.schema.source.classes:
            raise UnknownClassError(root_class)
        if root_class is None:
            instantiable = self.schema.instantiable_classes()
            root_class = instantiable[0] if instantiable else None

        definitions = {}
        for class_name in self.schema.instantiable_classes():
            definitions[class_name] = self.class_definition(class_name)
        for enum_name in self.schema.source.enums:
            definitions[enum_name] = self.enum_definition(enum_name)

        document = {"$schema": JSON_SCHEMA_DRAFT, "$id": self.schema.source.id, "definitions": definitions}
        if root_class is not None:
            root = copy.deepcopy(self.class_definition(root_class))
            document.update(root)
        document["title"] = self.schema.source.title or self.schema.name
        return document


def json_schema_document(schema: CompiledSchema, options: GeneratorOptions = None) -> Dict:
    """Build the JSON Schema (draft-07) of a compiled schema as plain data; the root class is inlined."""
    return _JsonSchemaBuilder(schema, options or GeneratorOptions()).document()


def gen_json_schema(schema: CompiledSchema, options: GeneratorOptions = None) -> str:
    return _dump_json(json_schema_document(schema, options))


_SQL_TYPES = {
    BaseKind.STRING: "TEXT",
    BaseKind.INTEGER: "INTEGER",
    BaseKind.FLOAT: "REAL",
    BaseKind.BOOLEAN: "BOOLEAN",
    BaseKind.URI: "TEXT",
    BaseKind.CURIE: "TEXT",
    BaseKind.DATE: "TEXT",
    BaseKind.DATETIME: "TEXT",
}
_SQL_RESERVED = {
    "check",
    "create",
    "default",
    "foreign",
    "from",
    "group",
    "index",
    "key",
    "order",
    "primary",
    "references",
    "select",
    "table",
    "to",
    "where",
}
_PLAIN_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def sql_identifier(name):
    if _PLAIN_IDENTIFIER.fullmatch(name) and name.lower() not in _SQL_RESERVED:
        return name
    return '"' + name.replace('"', '""') + '"'


def _sql_literal(value):
    return "'" + str(value).replace("'", "''") + "'"


def _sql_number(value):
    return repr(value)


class _DdlBuilder:
    def __init__(self, schema: CompiledSchema, options: GeneratorOptions):
        self.schema = schema
        self.options = options
        self.tables = schema.instantiable_classes()

    def key_of(self, class_name):
        """(column name, SQL type) of the key of a class table."""
        identifier = self.schema.identifier_slot(class_name)
        if identifier is not None:
            return identifier.name, self._scalar_type(identifier)
        if not self.options.surrogate_keys:
            raise GeneratorError(f"class {class_name} has no identifier slot and surrogate keys are disabled")
        return f"{class_name}_id", "INTEGER"

    def _scalar_type(self, slot: InducedSlot):
        if slot.range_kind == ElementKind.TYPE:
            return _SQL_TYPES[slot.base_kind]
        if slot.range_kind == ElementKind.ENUM:
            return "TEXT"
        return self.key_of(slot.effective_range)[1]

    def _value_constraints(self, column, slot: InducedSlot):
        constraints = []
        quoted = sql_identifier(column)
        if slot.range_kind == ElementKind.ENUM:
            values = slot.permissible_values
            if values:
                constraints.append(f"CHECK ({quoted} IN ({', '.join(_sql_literal(value) for value in values)}))")
            else:
                constraints.append(f"CHECK ({quoted} IS NULL)")
        elif slot.range_kind == ElementKind.CLASS:
            range_class = slot.effective_range
            if range_class in self.tables:
                key = self.key_of(range_class)[0]
                constraints.append(f"REFERENCES {sql_identifier(range_class)}({sql_identifier(key)})")
            else:
                log.warning(
                    "Range %s of %s.%s has no table, no foreign key emitted", range_class, slot.owner_class, column
                )
        if slot.range_kind == ElementKind.TYPE and slot.base_kind in (BaseKind.INTEGER, BaseKind.FLOAT):
            if slot.minimum_value is not None:
                constraints.append(f"CHECK ({quoted} >= {_sql_number(slot.minimum_value)})")
            if slot.maximum_value is not None:
                constraints.append(f"CHECK ({quoted} <= {_sql_number(slot.maximum_value)})")
        return constraints

    def dependencies(self, class_name):
        return [
            slot.effective_range
            for slot in self.schema.slots_of(class_name)
            if slot.range_kind == ElementKind.CLASS
            and not slot.multivalued
            and slot.effective_range in self.tables
            and slot.effective_range != class_name
        ]

    def table_order(self) -> List[str]:
        """Kahn's algorithm over foreign keys; ties and cycle leftovers keep declaration order."""
        pending = {table: set(self.dependencies(table)) for table in self.tables}
        ordered = []
        while pending:
            ready = [table for table in self.tables if table in pending and not pending[table]]
            if not ready:
                ready = [next(table for table in self.tables if table in pending)]
            table = ready[0]
            ordered.append(table)
            del pending[table]
            for dependencies in pending.values():
                dependencies.discard(table)
        return ordered

    def main_table(self, class_name):
        columns = []
        identifier = self.schema.identifier_slot(class_name)
        if identifier is None:
            key, _ = self.key_of(class_name)
            columns.append(f"{sql_identifier(key)} INTEGER PRIMARY KEY")
        for slot in self.schema.slots_of(class_name):
            if slot.multivalued:
                continue
            parts = [sql_identifier(slot.name), self._scalar_type(slot)]
            if slot.identifier:
                parts.append("PRIMARY KEY")
            elif slot.required:
                parts.append("NOT NULL")
            parts.extend(self._value_constraints(slot.name, slot))
            columns.append(" ".join(parts))
        return f"CREATE TABLE {sql_identifier(class_name)} ({', '.join(columns)});"

    def auxiliary_tables(self, class_name):
        key, key_type = self.key_of(class_name)
        owner_column = key if key == f"{class_name}_id" else f"{class_name}_{key}"
        statements = []
        for slot in self.schema.slots_of(class_name):
            if not slot.multivalued:
                continue
            columns = [
                f"{sql_identifier(owner_column)} {key_type} NOT NULL "
                f"REFERENCES {sql_identifier(class_name)}({sql_identifier(key)})",
                " ".join(
                    [sql_identifier(slot.name), self._scalar_type(slot), "NOT NULL"]
                    + self._value_constraints(slot.name, slot)
                ),
            ]
            statements.append(f"CREATE TABLE {sql_identifier(f'{class_name}_{slot.name}')} ({', '.join(columns)});")
        return statements

    def ddl(self):
        if self.options.dialect not in SQL_DIALECTS:
            raise GeneratorError(f"unsupported SQL dialect '{self.options.dialect}'")
        ordered = self.table_order()
        statements = [self.main_table(class_name) for class_name in ordered]
        for class_name in ordered:
            statements.extend(self.auxiliary_tables(class_name))
        return "".join(f"{statement}\n" for statement in statements)


def gen_sql_ddl(schema: CompiledSchema, options: GeneratorOptions = None) -> str:
    """
    Emit one CREATE TABLE statement per instantiable class, then one per multivalued slot.

    Tables are ordered so that every foreign key points at an earlier table whenever the references allow it.
    """
    return _DdlBuilder(schema, options or GeneratorOptions()).ddl()


def _prefix_entry(base):
    if base.endswith(("/", "#", ":", "?", "@", "[", "]")):
        return base
    return {"@id": base, "@prefix": True}


def _slot_term(uri, slot: InducedSlot):
    term = {"@id": uri}
    if slot.range_kind == ElementKind.CLASS or slot.base_kind in (BaseKind.URI, BaseKind.CURIE):
        term["@type"] = "@id"
    elif slot.range_kind == ElementKind.TYPE and slot.base_kind != BaseKind.STRING:
        term["@type"] = XSD_BASE + slot.base_kind.xsd_local_name
    return term


def context_document(schema: CompiledSchema) -> Dict:
    context = {prefix: _prefix_entry(base) for prefix, base in schema.prefix_map.items()}

    slot_samples = {}
    for slots in schema.induced.values():
        for slot in slots:
            slot_samples.setdefault(slot.name, slot)

    mappings = {}
    shadowed = {}
    for name in schema.source.element_names():
        element = schema.source.get_element(name)
        uri = schema.expanded_uris[name]
        if name in context:
            log.warning("Element %s has the same name as a prefix, its term %s moves to shadowed_terms", name, uri)
            shadowed[name] = uri
            continue
        kind = schema.source.element_kind(name)
        if kind == ElementKind.SLOT and name in slot_samples:
            context[name] = _slot_term(uri, slot_samples[name])
        else:
            context[name] = {"@id": uri}
        element_mappings = getattr(element, "mappings", ())
        if element_mappings:
            grouped = {}
            for mapping in element_mappings:
                grouped.setdefault(mapping.predicate.skos_curie, []).append(mapping.target)
            mappings[name] = grouped
    for name, slot in slot_samples.items():
        if name not in context:
            context[name] = _slot_term(schema.expanded_uris.get(name, slot.slot_uri_expanded), slot)

    document = {"@context": context}
    if mappings:
        document["mappings"] = mappings
    if shadowed:
        document["shadowed_terms"] = shadowed
    return document


def gen_context(schema: CompiledSchema) -> str:
    """
    JSON-LD context: prefix declarations plus one term per element name, mapped to its expanded URI.

    An element named like a declared prefix cannot have a term; its URI is listed under shadowed_terms.
    """
    return _dump_json(context_document(schema))


def generate(schema: CompiledSchema, options: GeneratorOptions):
    """Run one generator; docs return a {path: text} map, the other targets return text."""
    if options.target == GeneratorTarget.JSON_SCHEMA:
        return gen_json_schema(schema, options)
    if options.target == GeneratorTarget.SQL_DDL:
        return gen_sql_ddl(schema, options)
    if options.target == GeneratorTarget.JSONLD_CONTEXT:
        return gen_context(schema)
    from schemaforge.docs import gen_docs

    return gen_docs(schema)
