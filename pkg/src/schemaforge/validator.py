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

import json
import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from jsonschema import Draft7Validator
from schemaforge.common import (
    CURIE_VALUE_PATTERN,
    DATE_VALUE_PATTERN,
    DATETIME_VALUE_PATTERN,
    DECIMAL_TEXT_PATTERN,
    INTEGER_TEXT_PATTERN,
    URI_VALUE_PATTERN,
    Severity,
    split_curie,
)
from schemaforge.induction import CompiledSchema, InducedSlot, UnknownClassError
from schemaforge.metamodel import BaseKind, ElementKind
from schemaforge.records import DataRecord
from schemaforge.task_executor import map_in_order

log = logging.getLogger(__name__)

MISSING_REQUIRED = "missing_required"
SHAPE_VIOLATION = "shape_violation"
RANGE_VIOLATION = "range_violation"
ENUM_VIOLATION = "enum_violation"
PATTERN_VIOLATION = "pattern_violation"
BOUND_VIOLATION = "bound_violation"
UNKNOWN_SLOT = "unknown_slot"
UNDECLARED_PREFIX = "undeclared_prefix"
DUPLICATE_IDENTIFIER = "duplicate_identifier"
COERCED_VALUE = "coerced_value"
JSON_SCHEMA = "json_schema"

_BASE_KIND_PATTERNS = {
    BaseKind.URI: re.compile(URI_VALUE_PATTERN),
    BaseKind.CURIE: re.compile(CURIE_VALUE_PATTERN),
    BaseKind.DATE: re.compile(DATE_VALUE_PATTERN),
    BaseKind.DATETIME: re.compile(DATETIME_VALUE_PATTERN),
}


@dataclass(frozen=True)
class Finding:
    severity: Severity
    rule_id: str
    path: str
    message: str

    def to_dict(self):
        return {"severity": str(self.severity), "rule_id": self.rule_id, "path": self.path, "message": self.message}

    def __str__(self):
        return f"{self.severity} {self.rule_id} {self.path or '/'}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    findings: Tuple[Finding, ...] = ()

    @property
    def valid(self):
        return not any(finding.severity == Severity.ERROR for finding in self.findings)

    @property
    def errors(self):
        return [finding for finding in self.findings if finding.severity == Severity.ERROR]

    def rule_ids(self):
        return [finding.rule_id for finding in self.findings]

    def to_dict(self):
        return {"valid": self.valid, "findings": [finding.to_dict() for finding in self.findings]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_text(self):
        return "".join(f"{finding}\n" for finding in self.findings)


def _show(value):
    if isinstance(value, str):
        return f"'{value}'"
    return json.dumps(value, ensure_ascii=False, sort_keys=True, default=str)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def conforms_to_base_kind(base_kind: BaseKind, value) -> bool:
    """Check a scalar against a base kind without coercion. Integer literals are valid floats."""
    if base_kind == BaseKind.STRING:
        return isinstance(value, str)
    if base_kind == BaseKind.INTEGER:
        return _is_number(value) and (isinstance(value, int) or float(value).is_integer())
    if base_kind == BaseKind.FLOAT:
        return _is_number(value)
    if base_kind == BaseKind.BOOLEAN:
        return isinstance(value, bool)
    return isinstance(value, str) and _BASE_KIND_PATTERNS[base_kind].fullmatch(value) is not None


def coerce_text(base_kind: BaseKind, text):
    """Parse text as an integer, float or boolean; return None when it does not parse."""
    stripped = text.strip()
    if base_kind == BaseKind.BOOLEAN:
        return {"true": True, "false": False}.get(stripped.lower())
    if base_kind in (BaseKind.INTEGER, BaseKind.FLOAT) and INTEGER_TEXT_PATTERN.fullmatch(stripped):
        return int(stripped)
    if base_kind == BaseKind.FLOAT and DECIMAL_TEXT_PATTERN.fullmatch(stripped):
        return float(stripped)
    return None


def _in_path_order(findings: List[Finding]) -> List[Finding]:
    first_seen = {}
    for finding in findings:
        first_seen.setdefault(finding.path, len(first_seen))
    return sorted(findings, key=lambda finding: (first_seen[finding.path], finding.rule_id))


class _Checker:
    def __init__(self, schema: CompiledSchema = None, prefix_map=None, coerce=False):
        self.schema = schema
        self.prefix_map = prefix_map if prefix_map is not None else (schema.prefix_map if schema else {})
        self.coerce = coerce

    def record(self, class_name, values: Dict, path) -> List[Finding]:
        slots = {slot.name: slot for slot in self.schema.slots_of(class_name)}
        findings = []
        for key, value in values.items():
            slot = slots.get(key)
            key_path = f"{path}/{key}"
            if slot is None:
                group = [Finding(Severity.ERROR, UNKNOWN_SLOT, key_path, f"'{key}' is not a slot of {class_name}")]
            else:
                group = self.slot_value(slot, value, key_path)
            findings.extend(_in_path_order(group))
        for slot in slots.values():
            value = values.get(slot.name)
            if slot.required and (value is None or (slot.multivalued and value == [])):
                findings.append(
                    Finding(
                        Severity.ERROR,
                        MISSING_REQUIRED,
                        f"{path}/{slot.name}",
                        f"required slot '{slot.name}' is missing",
                    )
                )
        return findings

    def slot_value(self, slot: InducedSlot, value, path) -> List[Finding]:
        if value is None:
            return []
        if slot.multivalued:
            if not isinstance(value, list):
                message = f"slot '{slot.name}' is multivalued, expected a list"
                return [Finding(Severity.ERROR, SHAPE_VIOLATION, path, message)]
            findings = []
            for index, item in enumerate(value):
                findings.extend(self.value(slot, item, f"{path}/{index}"))
            return findings
        if isinstance(value, list):
            return [
                Finding(Severity.ERROR, SHAPE_VIOLATION, path, f"slot '{slot.name}' is single-valued, found a list")
            ]
        return self.value(slot, value, path)

    def value(self, slot: InducedSlot, value, path) -> List[Finding]:
        if slot.range_kind == ElementKind.ENUM:
            if isinstance(value, str) and value in slot.permissible_values:
                return []
            return [
                Finding(
                    Severity.ERROR,
                    ENUM_VIOLATION,
                    path,
                    f"{_show(value)} is not a permissible value of {slot.effective_range}",
                )
            ]
        if slot.range_kind == ElementKind.CLASS:
            return self._class_value(slot, value, path)
        return self._typed_value(slot, value, path)

    def _class_value(self, slot, value, path):
        range_class = slot.effective_range
        if isinstance(value, dict) and self.schema is not None:
            return self.record(range_class, value, path)
        if isinstance(value, str) and self.schema is not None and self.schema.identifier_slot(range_class):
            return []
        return [Finding(Severity.ERROR, RANGE_VIOLATION, path, f"{_show(value)} is not a valid {range_class}")]

    def _typed_value(self, slot, value, path):
        findings = []
        base_kind = slot.base_kind
        if self.coerce and isinstance(value, str) and base_kind in (BaseKind.INTEGER, BaseKind.FLOAT, BaseKind.BOOLEAN):
            coerced = coerce_text(base_kind, value)
            if coerced is not None:
                findings.append(
                    Finding(Severity.WARNING, COERCED_VALUE, path, f"coerced {_show(value)} to {_show(coerced)}")
                )
                value = coerced
        if not conforms_to_base_kind(base_kind, value):
            findings.append(
                Finding(Severity.ERROR, RANGE_VIOLATION, path, f"{_show(value)} is not a valid {slot.effective_range}")
            )
            return findings
        if base_kind == BaseKind.CURIE:
            prefix, _ = split_curie(value)
            if prefix not in self.prefix_map:
                message = f"{_show(value)} uses undeclared prefix '{prefix}'"
                findings.append(Finding(Severity.ERROR, UNDECLARED_PREFIX, path, message))
        if isinstance(value, str):
            for pattern in slot.patterns:
                if re.fullmatch(pattern, value) is None:
                    findings.append(
                        Finding(Severity.ERROR, PATTERN_VIOLATION, path, f"{_show(value)} does not match '{pattern}'")
                    )
        if _is_number(value):
            if slot.minimum_value is not None and value < slot.minimum_value:
                findings.append(
                    Finding(
                        Severity.ERROR,
                        BOUND_VIOLATION,
                        path,
                        f"{_show(value)} is less than the minimum value {_show(slot.minimum_value)}",
                    )
                )
            if slot.maximum_value is not None and value > slot.maximum_value:
                findings.append(
                    Finding(
                        Severity.ERROR,
                        BOUND_VIOLATION,
                        path,
                        f"{_show(value)} is greater than the maximum value {_show(slot.maximum_value)}",
                    )
                )
        return findings


def check_value(slot: InducedSlot, value, prefix_map, schema: CompiledSchema = None, path="", coerce=False):
    """
    Return the findings for one value of one induced slot.

    Class-ranged values are only checked structurally when schema is given.
    """
    return _in_path_order(_Checker(schema, prefix_map, coerce).value(slot, value, path))


class ValidationPlugin(ABC):
    """A check run on every record; findings are values, never exceptions."""

    name = None

    @abstractmethod
    def process(self, schema: CompiledSchema, record: DataRecord, path: str) -> List[Finding]:
        pass


class SchemaConformancePlugin(ValidationPlugin):
    """Native checks: required presence, shape, range, enum, pattern, bounds and unknown slots."""

    name = "conformance"

    def __init__(self, coerce=False):
        self.coerce = coerce

    def process(self, schema, record, path):
        return _Checker(schema, coerce=self.coerce).record(record.asserted_class, record.values, path)


class JsonSchemaPlugin(ValidationPlugin):
    """Checks records with jsonschema against the generated JSON Schema of their class."""

    name = "jsonschema"

    def __init__(self, **_):
        self._validators = {}

    def _validator(self, schema, class_name):
        key = (id(schema), class_name)
        if key not in self._validators:
            from schemaforge.generators import GeneratorOptions, json_schema_document

            document = json_schema_document(schema, GeneratorOptions(root_class=class_name))
            self._validators[key] = (schema, Draft7Validator(document))
        return self._validators[key][1]

    def process(self, schema, record, path):
        validator = self._validator(schema, record.asserted_class)
        errors = sorted(
            validator.iter_errors(record.values),
            key=lambda error: ([str(part) for part in error.absolute_path], error.message),
        )
        return [
            Finding(
                Severity.ERROR,
                JSON_SCHEMA,
                path + "".join(f"/{part}" for part in error.absolute_path),
                error.message,
            )
            for error in errors
        ]


PLUGINS = {plugin.name: plugin for plugin in (SchemaConformancePlugin, JsonSchemaPlugin)}


class Validator:
    def __init__(self, schema: CompiledSchema, plugins: Sequence[ValidationPlugin] = None, coerce=False, workers=1):
        self.schema = schema
        self.plugins = list(plugins) if plugins else [SchemaConformancePlugin(coerce=coerce)]
        self.workers = workers

    def _findings(self, record: DataRecord, path) -> List[Finding]:
        if record.asserted_class not in self.schema.induced:
            raise UnknownClassError(record.asserted_class)
        findings = []
        for plugin in self.plugins:
            findings.extend(plugin.process(self.schema, record, path))
        return findings

    def validate_record(self, record: DataRecord) -> ValidationReport:
        """
        Validate one record against the induced slots of its asserted class.

        :raise UnknownClassError: when the asserted class is not in the schema
        """
        return ValidationReport(tuple(self._findings(record, "")))

    def validate_collection(self, records: Sequence[DataRecord]) -> ValidationReport:
        """
        Validate records with index-prefixed paths, then check identifier uniqueness per class.

        Per-record work may run in parallel; findings are assembled in input order.
        """
        records = list(records)
        per_record = map_in_order(
            lambda indexed: self._findings(indexed[1], f"/{indexed[0]}"), list(enumerate(records)), self.workers
        )
        findings = [finding for record_findings in per_record for finding in record_findings]
        findings.extend(self._duplicate_identifiers(records))
        report = ValidationReport(tuple(findings))
        log.info("Validated %d record(s): %d finding(s)", len(records), len(report.findings))
        return report

    def _duplicate_identifiers(self, records):
        findings = []
        first_index = {}
        for index, record in enumerate(records):
            identifier = self.schema.identifier_slot(record.asserted_class)
            if identifier is None:
                continue
            value = record.values.get(identifier.name)
            if not isinstance(value, (str, int, float)) or isinstance(value, bool):
                continue
            key = (record.asserted_class, value)
            if key in first_index:
                findings.append(
                    Finding(
                        Severity.ERROR,
                        DUPLICATE_IDENTIFIER,
                        f"/{index}/{identifier.name}",
                        f"identifier {_show(value)} of record /{index} is already used by record /{first_index[key]}",
                    )
                )
            else:
                first_index[key] = index
        return findings


def validate_record(schema: CompiledSchema, record: DataRecord, coerce=False, plugins=None) -> ValidationReport:
    return Validator(schema, plugins=plugins, coerce=coerce).validate_record(record)


def validate_collection(
    schema: CompiledSchema, records: Sequence[DataRecord], coerce=False, plugins=None, workers=1
) -> ValidationReport:
    return Validator(schema, plugins=plugins, coerce=coerce, workers=workers).validate_collection(records)
