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
Declarative transformations between schema versions and their data.

A transform spec document has a top-level 'transformations' list. Each entry binds a source class to a target class
and lists rules, applied in order to both the schema and the records:

    transformations:
      - source_class: Sample
        rules:
          - rename_slot: {from: environment_type, to: sample_type}
          - split_slot:
              from: position
              pattern: '([+-]?\\d+(?:\\.\\d+)?)°?\\s+([+-]?\\d+(?:\\.\\d+)?)°?'
              targets: [{slot: latitude, range: float}, {slot: longitude, range: float}]
    subset_classes: [Sample]
"""

import dataclasses
import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple

from common.utils import SchemaforgeError, read_text
from schemaforge.loader import SchemaParseError, load_yaml_document
from schemaforge.metamodel import (
    BaseKind,
    ClassDefinition,
    SchemaDefinition,
    SlotDefinition,
    builtin_schema,
    check_structure,
)
from schemaforge.records import DataRecord
from schemaforge.task_executor import map_in_order
from schemaforge.validator import coerce_text

log = logging.getLogger(__name__)


class TransformSpecError(SchemaforgeError):
    """A transform spec is malformed or does not fit the source schema."""

    pass


class TransformError(SchemaforgeError):
    """A record value cannot be transformed."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


def _base_kind_of(range_name) -> Optional[BaseKind]:
    type_def = builtin_schema().types.get(range_name)
    return type_def.base if type_def else None


def parse_typed(range_name, value, slot_name):
    """Parse text to the base kind of a built-in range; other ranges keep the value as is."""
    base_kind = _base_kind_of(range_name)
    if not isinstance(value, str) or base_kind not in (BaseKind.INTEGER, BaseKind.FLOAT, BaseKind.BOOLEAN):
        return value
    parsed = coerce_text(base_kind, value)
    if parsed is None:
        raise TransformError(f"'{value}' for slot '{slot_name}' is not a valid {range_name}", value)
    return parsed


def _replace_key(values: Dict[str, Any], key, pairs) -> Dict[str, Any]:
    """Return values with key replaced in place by the (key, value) pairs."""
    replaced = {}
    for current, value in values.items():
        if current == key:
            replaced.update(pairs)
        else:
            replaced[current] = value
    return replaced


class _SchemaEditor:
    """Mutable view over the classes and global slots of a schema while rules are applied."""

    def __init__(self, schema: SchemaDefinition):
        self.schema = schema
        self.classes: Dict[str, ClassDefinition] = dict(schema.classes)
        self.slots: Dict[str, SlotDefinition] = dict(schema.slots)
        self.diagnostics = list(schema.diagnostics)

    def warn(self, message):
        log.warning(message)
        self.diagnostics.append(message)

    def require_slot(self, class_name, slot_name, rule):
        if slot_name not in self.classes[class_name].own_slot_names:
            raise TransformSpecError(f"{rule} references '{slot_name}', which is not a slot of class '{class_name}'")

    def slot(self, class_name, slot_name) -> SlotDefinition:
        class_def = self.classes[class_name]
        if slot_name in class_def.attributes:
            return class_def.attributes[slot_name]
        return self.slots.get(slot_name, SlotDefinition(name=slot_name))

    def _used_elsewhere(self, class_name, slot_name):
        return any(slot_name in other.slots for name, other in self.classes.items() if name != class_name)

    def replace_slot(self, class_name, slot_name, pairs: Sequence[Tuple[str, SlotDefinition]]):
        """Put the (name, definition) pairs where slot_name was declared on class_name."""
        class_def = self.classes[class_name]
        slot_usage = {name: usage for name, usage in class_def.slot_usage.items() if name != slot_name}
        if slot_name in class_def.attributes:
            attributes = _replace_key(class_def.attributes, slot_name, pairs)
            self.classes[class_name] = dataclasses.replace(class_def, attributes=attributes, slot_usage=slot_usage)
            return
        if not self._used_elsewhere(class_name, slot_name):
            self.slots.pop(slot_name, None)
        slots = tuple(name for name in class_def.slots if name != slot_name)
        attributes = dict(class_def.attributes)
        attributes.update(pairs)
        self.classes[class_name] = dataclasses.replace(
            class_def, slots=slots, attributes=attributes, slot_usage=slot_usage
        )

    def rename_slot(self, class_name, slot_name, new_name):
        class_def = self.classes[class_name]
        if new_name in class_def.own_slot_names and new_name != slot_name:
            raise TransformSpecError(f"class '{class_name}' already has a slot named '{new_name}'")
        if slot_name in class_def.attributes:
            renamed = dataclasses.replace(class_def.attributes[slot_name], name=new_name)
            attributes = _replace_key(class_def.attributes, slot_name, [(new_name, renamed)])
            slot_usage = _replace_key(class_def.slot_usage, slot_name, [])
            if slot_name in class_def.slot_usage:
                slot_usage[new_name] = dataclasses.replace(class_def.slot_usage[slot_name], name=new_name)
            self.classes[class_name] = dataclasses.replace(class_def, attributes=attributes, slot_usage=slot_usage)
            return renamed
        if new_name in self.slots:
            raise TransformSpecError(f"a global slot named '{new_name}' already exists")
        renamed = dataclasses.replace(self.slot(class_name, slot_name), name=new_name)
        if not self._used_elsewhere(class_name, slot_name):
            self.slots.pop(slot_name, None)
        self.slots[new_name] = renamed
        slots = tuple(new_name if name == slot_name else name for name in class_def.slots)
        slot_usage = {
            (new_name if name == slot_name else name): dataclasses.replace(usage, name=new_name)
            if name == slot_name
            else usage
            for name, usage in class_def.slot_usage.items()
        }
        self.classes[class_name] = dataclasses.replace(class_def, slots=slots, slot_usage=slot_usage)
        return renamed

    def retype_slot(self, class_name, slot_name, changes: Dict[str, Any]):
        class_def = self.classes[class_name]
        if slot_name in class_def.attributes:
            attributes = dict(class_def.attributes)
            attributes[slot_name] = dataclasses.replace(attributes[slot_name], **changes)
            self.classes[class_name] = dataclasses.replace(class_def, attributes=attributes)
            return
        # Global slots stay shared; the class gets an overlay instead.
        slot_usage = dict(class_def.slot_usage)
        usage = slot_usage.get(slot_name, SlotDefinition(name=slot_name))
        slot_usage[slot_name] = dataclasses.replace(usage, **changes)
        self.classes[class_name] = dataclasses.replace(class_def, slot_usage=slot_usage)

    def rename_class(self, class_name, new_name):
        if new_name in self.classes or new_name in self.schema.enums or new_name in self.schema.types:
            raise TransformSpecError(f"target class '{new_name}' already names an element")

        def rename(name):
            return new_name if name == class_name else name

        def retarget(slot: SlotDefinition):
            return dataclasses.replace(slot, range=rename(slot.range)) if slot.range == class_name else slot

        classes = {}
        for name, class_def in self.classes.items():
            classes[rename(name)] = dataclasses.replace(
                class_def,
                name=rename(name),
                is_a=rename(class_def.is_a) if class_def.is_a else None,
                mixins=tuple(rename(mixin) for mixin in class_def.mixins),
                attributes={key: retarget(slot) for key, slot in class_def.attributes.items()},
                slot_usage={key: retarget(slot) for key, slot in class_def.slot_usage.items()},
            )
        self.classes = classes
        self.slots = {key: retarget(slot) for key, slot in self.slots.items()}

    def result(self) -> SchemaDefinition:
        return dataclasses.replace(
            self.schema, classes=self.classes, slots=self.slots, diagnostics=tuple(self.diagnostics)
        )


class TransformRule(ABC):
    """One step of a class binding; applied to the derived schema and to record values."""

    kind: ClassVar[str]

    @property
    @abstractmethod
    def source_slot(self) -> str:
        pass

    @abstractmethod
    def derive(self, editor: _SchemaEditor, class_name):
        pass

    @abstractmethod
    def transform_values(self, values: Dict[str, Any]) -> Dict[str, Any]:
        pass


@dataclass(frozen=True)
class RenameSlot(TransformRule):
    kind: ClassVar[str] = "rename_slot"
    source: str
    target: str

    @property
    def source_slot(self):
        return self.source

    def derive(self, editor, class_name):
        editor.require_slot(class_name, self.source, self.kind)
        renamed = editor.rename_slot(class_name, self.source, self.target)
        if renamed.slot_uri:
            editor.warn(
                f"{class_name}.{self.target}: slot_uri '{renamed.slot_uri}' kept from '{self.source}' after rename"
            )

    def transform_values(self, values):
        if self.source not in values:
            return values
        return _replace_key(values, self.source, [(self.target, values[self.source])])


@dataclass(frozen=True)
class SplitTarget:
    slot: str
    range: str = "string"
    description: Optional[str] = None
    required: Optional[bool] = None


@dataclass(frozen=True)
class SplitSlot(TransformRule):
    """Either a literal separator or a pattern with one capture group per target."""

    kind: ClassVar[str] = "split_slot"
    source: str
    targets: Tuple[SplitTarget, ...]
    separator: Optional[str] = None
    pattern: Optional[str] = None

    @property
    def source_slot(self):
        return self.source

    def derive(self, editor, class_name):
        editor.require_slot(class_name, self.source, self.kind)
        class_def = editor.classes[class_name]
        for target in self.targets:
            if target.slot != self.source and target.slot in class_def.own_slot_names:
                raise TransformSpecError(f"split target '{target.slot}' is already a slot of class '{class_name}'")
        pairs = [
            (
                target.slot,
                SlotDefinition(
                    name=target.slot, description=target.description, range=target.range, required=target.required
                ),
            )
            for target in self.targets
        ]
        editor.replace_slot(class_name, self.source, pairs)

    def split(self, value) -> List[str]:
        if not isinstance(value, str):
            raise TransformError(f"cannot split non-text value {value!r} of slot '{self.source}'", value)
        if self.pattern is not None:
            match = re.fullmatch(self.pattern, value.strip())
            parts = list(match.groups()) if match else []
        else:
            parts = [part.strip() for part in value.split(self.separator)]
        if len(parts) != len(self.targets) or any(part is None for part in parts):
            names = ", ".join(target.slot for target in self.targets)
            raise TransformError(f"cannot split '{value}' of slot '{self.source}' into {names}", value)
        return parts

    def transform_values(self, values):
        if self.source not in values:
            return values
        # null is the same as absent: no targets
        if values[self.source] is None:
            return _replace_key(values, self.source, [])
        parts = self.split(values[self.source])
        pairs = [
            (target.slot, parse_typed(target.range, part, target.slot)) for target, part in zip(self.targets, parts)
        ]
        return _replace_key(values, self.source, pairs)


@dataclass(frozen=True)
class CopySlot(TransformRule):
    kind: ClassVar[str] = "copy_slot"
    name: str

    @property
    def source_slot(self):
        return self.name

    def derive(self, editor, class_name):
        editor.require_slot(class_name, self.name, self.kind)

    def transform_values(self, values):
        return values


@dataclass(frozen=True)
class DropSlot(TransformRule):
    kind: ClassVar[str] = "drop_slot"
    name: str

    @property
    def source_slot(self):
        return self.name

    def derive(self, editor, class_name):
        editor.require_slot(class_name, self.name, self.kind)
        editor.replace_slot(class_name, self.name, [])

    def transform_values(self, values):
        return {key: value for key, value in values.items() if key != self.name}


@dataclass(frozen=True)
class RetypeSlot(TransformRule):
    kind: ClassVar[str] = "retype_slot"
    name: str
    range: Optional[str] = None
    required: Optional[bool] = None
    multivalued: Optional[bool] = None

    @property
    def source_slot(self):
        return self.name

    @property
    def changes(self):
        fields = {"range": self.range, "required": self.required, "multivalued": self.multivalued}
        return {key: value for key, value in fields.items() if value is not None}

    def derive(self, editor, class_name):
        editor.require_slot(class_name, self.name, self.kind)
        editor.retype_slot(class_name, self.name, self.changes)

    def _convert(self, value):
        if self.multivalued and not isinstance(value, list):
            value = [value]
        elif self.multivalued is False and isinstance(value, list):
            if len(value) != 1:
                raise TransformError(f"slot '{self.name}' holds {len(value)} values, expected one", value)
            value = value[0]
        if self.range is None:
            return value
        if isinstance(value, list):
            return [parse_typed(self.range, item, self.name) for item in value]
        if _base_kind_of(self.range) == BaseKind.STRING and not isinstance(value, (str, dict)):
            return str(value)
        return parse_typed(self.range, value, self.name)

    def transform_values(self, values):
        if values.get(self.name) is None:
            return values
        return _replace_key(values, self.name, [(self.name, self._convert(values[self.name]))])


RULE_KINDS = {rule.kind: rule for rule in (RenameSlot, SplitSlot, CopySlot, DropSlot, RetypeSlot)}


@dataclass(frozen=True)
class ClassBinding:
    source_class: str
    target_class: str
    rules: Tuple[TransformRule, ...] = ()


@dataclass(frozen=True)
class TransformSpec:
    bindings: Tuple[ClassBinding, ...] = ()
    subset_classes: Optional[Tuple[str, ...]] = None
    diagnostics: Tuple[str, ...] = dataclasses.field(default=(), compare=False)

    def binding_for(self, class_name) -> Optional[ClassBinding]:
        for binding in self.bindings:
            if binding.source_class == class_name:
                return binding
        return None


class _SpecParser:
    def __init__(self, source):
        self.source = source
        self.diagnostics = []

    def fail(self, path, message):
        raise TransformSpecError(f"{self.source + ': ' if self.source else ''}{path}: {message}")

    def text(self, path, value):
        if not isinstance(value, str) or not value:
            self.fail(path, f"expected text, found {value!r}")
        return value

    def flag(self, path, value):
        if value is not None and not isinstance(value, bool):
            self.fail(path, f"expected true or false, found {value!r}")
        return value

    def fields(self, path, value, required, optional=()):
        if isinstance(value, str) and len(required) == 1:
            value = {required[0]: value}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, found {type(value).__name__}")
        unknown = sorted(set(value) - set(required) - set(optional))
        if unknown:
            self.fail(path, f"unknown key(s) {', '.join(map(str, unknown))}")
        for key in required:
            if key not in value:
                self.fail(path, f"missing required key '{key}'")
        return value

    def split_target(self, path, value):
        data = self.fields(path, value, ("slot",), ("range", "description", "required"))
        return SplitTarget(
            slot=self.text(f"{path}/slot", data["slot"]),
            range=self.text(f"{path}/range", data.get("range", "string")),
            description=data.get("description"),
            required=self.flag(f"{path}/required", data.get("required")),
        )

    def rule(self, path, value) -> TransformRule:
        if not isinstance(value, dict) or len(value) != 1:
            self.fail(path, "a rule is a mapping with exactly one rule kind")
        ((kind, body),) = value.items()
        if kind not in RULE_KINDS:
            self.fail(path, f"unknown rule kind '{kind}', expected one of {', '.join(RULE_KINDS)}")
        path = f"{path}/{kind}"
        if kind == RenameSlot.kind:
            data = self.fields(path, body, ("from", "to"))
            rule = RenameSlot(self.text(f"{path}/from", data["from"]), self.text(f"{path}/to", data["to"]))
            if rule.source == rule.target:
                self.diagnostics.append(f"{path}: rename of '{rule.source}' to itself has no effect")
                log.warning("%s: rename of '%s' to itself has no effect", path, rule.source)
            return rule
        if kind == SplitSlot.kind:
            return self.split_rule(path, body)
        if kind == RetypeSlot.kind:
            data = self.fields(path, body, ("name",), ("range", "required", "multivalued"))
            rule = RetypeSlot(
                name=self.text(f"{path}/name", data["name"]),
                range=self.text(f"{path}/range", data["range"]) if "range" in data else None,
                required=self.flag(f"{path}/required", data.get("required")),
                multivalued=self.flag(f"{path}/multivalued", data.get("multivalued")),
            )
            if not rule.changes:
                self.fail(path, "retype_slot needs at least one of range, required, multivalued")
            return rule
        data = self.fields(path, body, ("name",))
        return RULE_KINDS[kind](self.text(f"{path}/name", data["name"]))

    def split_rule(self, path, body):
        data = self.fields(path, body, ("from", "targets"), ("separator", "pattern"))
        if ("separator" in data) == ("pattern" in data):
            self.fail(path, "split_slot needs exactly one of separator or pattern")
        targets = data["targets"]
        if not isinstance(targets, list) or not targets:
            self.fail(f"{path}/targets", "expected a non-empty list")
        targets = tuple(self.split_target(f"{path}/targets/{index}", item) for index, item in enumerate(targets))
        names = [target.slot for target in targets]
        if len(set(names)) != len(names):
            self.fail(f"{path}/targets", f"split targets are not distinct: {', '.join(names)}")
        pattern = data.get("pattern")
        if pattern is not None:
            try:
                groups = re.compile(self.text(f"{path}/pattern", pattern)).groups
            except re.error as e:
                self.fail(f"{path}/pattern", f"invalid pattern: {e}")
            if groups != len(targets):
                self.fail(f"{path}/pattern", f"pattern has {groups} group(s) for {len(targets)} target(s)")
        separator = data.get("separator")
        if separator is not None:
            self.text(f"{path}/separator", separator)
        source = self.text(f"{path}/from", data["from"])
        return SplitSlot(source=source, targets=targets, separator=separator, pattern=pattern)

    def binding(self, path, value) -> ClassBinding:
        data = self.fields(path, value, ("source_class",), ("target_class", "rules"))
        source_class = self.text(f"{path}/source_class", data["source_class"])
        target_class = self.text(f"{path}/target_class", data.get("target_class", source_class))
        rules = data.get("rules") or []
        if not isinstance(rules, list):
            self.fail(f"{path}/rules", "expected a list")
        parsed = tuple(self.rule(f"{path}/rules/{index}", item) for index, item in enumerate(rules))
        consumed = [rule.source_slot for rule in parsed]
        repeated = sorted({name for name in consumed if consumed.count(name) > 1})
        if repeated:
            self.fail(f"{path}/rules", f"slot(s) consumed by more than one rule: {', '.join(repeated)}")
        return ClassBinding(source_class, target_class, parsed)

    def spec(self, document) -> TransformSpec:
        document = document if document is not None else {}
        data = self.fields("", document, ("transformations",), ("subset_classes",))
        transformations = data["transformations"] or []
        if not isinstance(transformations, list):
            self.fail("transformations", "expected a list")
        bindings = tuple(
            self.binding(f"transformations/{index}", item) for index, item in enumerate(transformations)
        )
        sources = [binding.source_class for binding in bindings]
        if len(set(sources)) != len(sources):
            self.fail("transformations", "a source class is bound more than once")
        subset = data.get("subset_classes")
        if subset is not None:
            if not isinstance(subset, list):
                self.fail("subset_classes", "expected a list")
            subset = tuple(self.text(f"subset_classes/{index}", name) for index, name in enumerate(subset))
        return TransformSpec(bindings, subset, tuple(self.diagnostics))


def parse_transform_spec(text, source=None) -> TransformSpec:
    """
    Parse a transform spec document.

    :raise TransformSpecError: on unknown rule kinds, malformed rules or slots consumed twice
    """
    try:
        document = load_yaml_document(text, source)
    except SchemaParseError as e:
        raise TransformSpecError(str(e)) from e
    return _SpecParser(source).spec(document)


def load_transform_spec(file_path) -> TransformSpec:
    return parse_transform_spec(read_text(file_path), source=str(file_path))


def _range_references(slot: SlotDefinition):
    return [slot.range] if slot.range else []


def _subset(schema: SchemaDefinition, keep: Sequence[str]) -> SchemaDefinition:
    """Keep the listed classes, their ancestors, and every class, slot, enum and type they reach."""
    if not keep:
        raise TransformSpecError("subset_classes keep-list is empty")
    unknown = [name for name in keep if name not in schema.classes]
    if unknown:
        raise TransformSpecError(f"subset_classes names unknown class(es): {', '.join(unknown)}")

    kept_classes, kept_slots, ranges = [], [], []
    pending = list(keep)
    while pending:
        name = pending.pop(0)
        if name in kept_classes:
            continue
        kept_classes.append(name)
        class_def = schema.classes[name]
        pending.extend(class_def.parents)
        slot_defs = list(class_def.attributes.values()) + list(class_def.slot_usage.values())
        slot_names = list(class_def.slots) + list(class_def.slot_usage)
        while slot_names:
            slot_name = slot_names.pop(0)
            if slot_name in schema.slots and slot_name not in kept_slots:
                kept_slots.append(slot_name)
                slot_defs.append(schema.slots[slot_name])
                if schema.slots[slot_name].is_a:
                    slot_names.append(schema.slots[slot_name].is_a)
        for slot in slot_defs:
            if slot.is_a and slot.is_a in schema.slots and slot.is_a not in kept_slots:
                kept_slots.append(slot.is_a)
                slot_defs.append(schema.slots[slot.is_a])
            for reference in _range_references(slot):
                if reference in schema.classes:
                    pending.append(reference)
                else:
                    ranges.append(reference)
    if schema.default_range:
        ranges.append(schema.default_range)

    return dataclasses.replace(
        schema,
        classes={name: class_def for name, class_def in schema.classes.items() if name in kept_classes},
        slots={name: slot for name, slot in schema.slots.items() if name in kept_slots},
        enums={name: enum_def for name, enum_def in schema.enums.items() if name in ranges},
        types={name: type_def for name, type_def in schema.types.items() if name in ranges},
    )


def derive_schema(spec: TransformSpec, source: SchemaDefinition) -> SchemaDefinition:
    """
    Apply the spec to the source schema and return the target schema.

    Rules apply in order per binding; class renames happen after the rules of their binding, and the subset last.

    :raise TransformSpecError: when the spec references an unknown class or slot
    """
    editor = _SchemaEditor(source)
    for binding in spec.bindings:
        if binding.source_class not in source.classes:
            raise TransformSpecError(f"transformation references unknown class '{binding.source_class}'")
    for binding in spec.bindings:
        for rule in binding.rules:
            rule.derive(editor, binding.source_class)
        if binding.target_class != binding.source_class:
            editor.rename_class(binding.source_class, binding.target_class)
    derived = editor.result()
    if spec.subset_classes is not None:
        derived = _subset(derived, spec.subset_classes)
    check_structure(derived)
    log.info("Derived schema %s with %d classes", derived.name, len(derived.classes))
    return derived


def transform_record(spec: TransformSpec, record: DataRecord) -> DataRecord:
    """
    Apply the binding of the record's class to its values; records of unbound classes pass through.

    Keys no rule touches keep their value and position. Absent source slots produce no target values.

    :raise TransformError: when a value cannot be split or parsed, naming the value
    """
    binding = spec.binding_for(record.asserted_class)
    if binding is None:
        return record
    values = dict(record.values)
    for rule in binding.rules:
        values = rule.transform_values(values)
    return DataRecord(binding.target_class, values)


@dataclass(frozen=True)
class TransformResult:
    record: Optional[DataRecord]
    errors: Tuple[str, ...] = ()

    @property
    def ok(self):
        return self.record is not None


def _transform_one(spec, record) -> TransformResult:
    try:
        return TransformResult(transform_record(spec, record))
    except TransformError as e:
        return TransformResult(None, (str(e),))


def transform_collection(spec: TransformSpec, records: Sequence[DataRecord], workers=1) -> List[TransformResult]:
    """Transform every record; the result list has one entry per input record, in input order."""
    results = map_in_order(lambda record: _transform_one(spec, record), records, workers=workers)
    failed = sum(1 for result in results if not result.ok)
    if failed:
        log.warning("%d of %d record(s) failed to transform", failed, len(results))
    return results
