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

"""Markdown documentation pages for a compiled schema."""

import logging
import re
from typing import Dict, List

from schemaforge.induction import CompiledSchema, InducedSlot, contract_uri
from schemaforge.metamodel import MappingPredicate, SlotDefinition, dump_yaml, slot_to_dict
from schemaforge.sheets import format_cardinality

log = logging.getLogger(__name__)

INDEX_PAGE = "index.md"


def page_name(element_name):
    return element_name.replace(" ", "_") + ".md"


def link(element_name):
    return f"[{element_name}]({page_name(element_name)})"


def mermaid_id(element_name):
    """Mermaid class ids hold only word characters."""
    return re.sub(r"\W", "_", element_name)


def _cell(text):
    if text is None:
        return ""
    return str(text).replace("|", "\\|").replace("\n", " ")


class _Raw(str):
    """Table cell text that already is markdown."""


def _table(headers, rows):
    lines = ["| " + " | ".join(headers) + " |", "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        cells = [cell if isinstance(cell, _Raw) else _cell(cell) for cell in row]
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _uri_link(schema: CompiledSchema, uri):
    curie = contract_uri(schema.prefix_map, uri)
    if curie.passthrough:
        return f"<{uri}>"
    return f"[{curie.text}]({uri})"


def _cardinality(slot: InducedSlot):
    return format_cardinality(slot.minimum_cardinality, slot.maximum_cardinality)


class _DocsBuilder:
    def __init__(self, schema: CompiledSchema):
        self.schema = schema
        self.source = schema.source

    def slot_definitions(self) -> Dict[str, SlotDefinition]:
        """Global slots, then attributes not shadowed by a global slot, in declaration order."""
        slots = dict(self.source.slots)
        for class_def in self.source.classes.values():
            for name, attribute in class_def.attributes.items():
                slots.setdefault(name, attribute)
        return slots

    def class_page(self, class_name) -> str:
        class_def = self.source.classes[class_name]
        lines = [f"# Class: {class_name}", ""]
        if class_def.abstract:
            lines += ["_Abstract class._", ""]
        lines += [f"Description: {class_def.description or 'None'}", ""]
        lines += [f"URI: {_uri_link(self.schema, self.schema.expanded_uris[class_name])}", ""]
        lines += self._diagram(class_name) + [""]
        lines += ["## Inheritance", ""] + self._inheritance(class_name) + [""]
        lines += ["## Slots", ""]
        lines += _table(
            ["Name", "Cardinality and Range", "Inheritance", "Examples"],
            [
                [
                    _Raw(link(slot.name)),
                    _Raw(f"{_cardinality(slot)} {link(slot.effective_range)}"),
                    str(slot.inheritance_label),
                    ", ".join(slot.examples),
                ]
                for slot in self.schema.slots_of(class_name)
            ],
        )
        lines += ["", "## Mappings", ""]
        rows = [["self", contract_uri(self.schema.prefix_map, self.schema.expanded_uris[class_name]).text]]
        native = self._native_uri(class_name)
        rows.append(["native", contract_uri(self.schema.prefix_map, native).text])
        for predicate in MappingPredicate:
            for mapping in class_def.mappings:
                if mapping.predicate == predicate:
                    rows.append([str(predicate), mapping.target])
        lines += _table(["Mapping Type", "Mapped Value"], rows)
        return "\n".join(lines) + "\n"

    def _native_uri(self, name):
        default_prefix = self.source.default_prefix
        if default_prefix and default_prefix in self.schema.prefix_map:
            base = self.schema.prefix_map[default_prefix]
        else:
            base = self.source.id if self.source.id.endswith(("/", "#")) else f"{self.source.id}/"
        return base + name.replace(" ", "_")

    def _diagram(self, class_name) -> List[str]:
        class_def = self.source.classes[class_name]
        node = mermaid_id(class_name)
        lines = ["```mermaid", "classDiagram", f"    class {node}"]
        if class_def.is_a:
            lines.append(f"    {mermaid_id(class_def.is_a)} <|-- {node}")
        for mixin in class_def.mixins:
            lines.append(f"    {mermaid_id(mixin)} <|.. {node}")
        for child, child_def in self.source.classes.items():
            if child_def.is_a == class_name:
                lines.append(f"    {node} <|-- {mermaid_id(child)}")
        for slot in self.schema.slots_of(class_name):
            if slot.base_kind is None:
                target = mermaid_id(slot.effective_range)
                lines.append(f'    {node} --> "{_cardinality(slot)}" {target} : {slot.name}')
        lines.append("```")
        return lines

    def _inheritance(self, class_name) -> List[str]:
        chain = []
        current = self.source.classes[class_name].is_a
        while current and current not in chain:
            chain.insert(0, current)
            current = self.source.classes[current].is_a
        lines = [f"{'    ' * depth}* {link(name)}" for depth, name in enumerate(chain)]
        lines.append(f"{'    ' * len(chain)}* **{class_name}**")
        for child, child_def in self.source.classes.items():
            if child_def.is_a == class_name:
                lines.append(f"{'    ' * (len(chain) + 1)}* {link(child)}")
        mixins = self.source.classes[class_name].mixins
        if mixins:
            lines += ["", "Mixins: " + ", ".join(link(mixin) for mixin in mixins)]
        return lines

    def slot_page(self, slot_name, slot: SlotDefinition) -> str:
        effective_range = slot.range or self.source.effective_default_range
        lines = [f"# Slot: {slot_name}", "", f"Description: {slot.description or 'None'}", ""]
        lines += [f"Range: {link(effective_range)}", ""]
        lines += ["## Applicable Classes", ""]
        rows = []
        for class_name, class_def in self.source.classes.items():
            if any(induced.name == slot_name for induced in self.schema.slots_of(class_name)):
                modifies = "yes" if slot_name in class_def.slot_usage else "no"
                rows.append([_Raw(link(class_name)), class_def.description, modifies])
        lines += _table(["Name", "Description", "Modifies Slot"], rows)
        lines += ["", "## Schema Source", "", "```yaml"]
        lines += dump_yaml(self._source_echo(slot_name, slot, effective_range)).rstrip("\n").split("\n")
        lines.append("```")
        return "\n".join(lines) + "\n"

    def _source_echo(self, slot_name, slot: SlotDefinition, effective_range):
        echo = {"name": slot_name}
        definition = slot_to_dict(slot)
        if "description" in definition:
            echo["description"] = definition.pop("description")
        if slot.from_schema:
            echo["from_schema"] = slot.from_schema
        if "is_a" in definition:
            echo["is_a"] = definition.pop("is_a")
        uri = self.schema.expanded_uris.get(slot_name, self._native_uri(slot_name))
        echo["slot_uri"] = definition.pop("slot_uri", None) or contract_uri(self.schema.prefix_map, uri).text
        domain_of = [name for name, class_def in self.source.classes.items() if slot_name in class_def.own_slot_names]
        if domain_of:
            echo["domain_of"] = domain_of
        definition["range"] = effective_range
        echo.update({key: definition[key] for key in ["range"] + [key for key in definition if key != "range"]})
        return echo

    def enum_page(self, enum_name) -> str:
        enum_def = self.source.enums[enum_name]
        lines = [f"# Enum: {enum_name}", "", f"Description: {enum_def.description or 'None'}", ""]
        lines += ["## Permissible Values", ""]
        lines += _table(
            ["Value", "Meaning", "Description"],
            [[value.text, value.meaning, value.description] for value in enum_def.permissible_values.values()],
        )
        lines += ["", "## Slots", ""]
        rows = [
            [_Raw(link(name)), slot.description]
            for name, slot in self.slot_definitions().items()
            if (slot.range or self.source.effective_default_range) == enum_name
        ]
        lines += _table(["Name", "Description"], rows)
        return "\n".join(lines) + "\n"

    def type_page(self, type_name) -> str:
        type_def = self.source.types[type_name]
        lines = [f"# Type: {type_name}", "", f"Description: {type_def.description or 'None'}", ""]
        lines += [f"Base: {type_def.base}", ""]
        lines += [f"URI: {_uri_link(self.schema, self.schema.expanded_uris[type_name])}"]
        if type_def.pattern:
            lines += ["", f"Pattern: `{type_def.pattern}`"]
        return "\n".join(lines) + "\n"

    def index_page(self) -> str:
        lines = [f"# {self.source.title or self.source.name}", "", f"URI: {self.source.id}", ""]
        lines += [f"Name: {self.source.name}"]
        if self.source.version:
            lines += ["", f"Version: {self.source.version}"]
        sections = [
            ("Classes", "Class", self.source.classes),
            ("Slots", "Slot", self.slot_definitions()),
            ("Enumerations", "Enumeration", self.source.enums),
            ("Types", "Type", self.source.types),
        ]
        for title, header, elements in sections:
            if not elements:
                continue
            lines += ["", f"## {title}", ""]
            lines += _table(
                [header, "Description"],
                [[_Raw(link(name)), element.description] for name, element in elements.items()],
            )
        return "\n".join(lines) + "\n"

    def pages(self) -> Dict[str, str]:
        pages = {INDEX_PAGE: self.index_page()}
        for class_name in self.source.classes:
            pages[page_name(class_name)] = self.class_page(class_name)
        for slot_name, slot in self.slot_definitions().items():
            pages[page_name(slot_name)] = self.slot_page(slot_name, slot)
        for enum_name in self.source.enums:
            pages[page_name(enum_name)] = self.enum_page(enum_name)
        for type_name in self.source.types:
            pages[page_name(type_name)] = self.type_page(type_name)
        return pages


def gen_docs(schema: CompiledSchema) -> Dict[str, str]:
    """
    Render one markdown page per class, slot, enum and type plus index.md.

    Returns a map from relative file name to page text.
    """
    pages = _DocsBuilder(schema).pages()
    log.info("Generated %d documentation pages for %s", len(pages), schema.name)
    return pages
