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
Best-practice checks for schema definitions.

Lints are style findings on a parsed schema, distinct from the structural errors that stop loading. Every module
level function named linter_<rule_id> is a rule: it takes the schema and yields (element, message) pairs. Rules run
on the schema as written, before imports are resolved, so broken schemas still get feedback.
"""

import json
import logging
import re
from configparser import ConfigParser
from configparser import Error as ConfigParserError
from dataclasses import dataclass
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

from common.utils import SchemaforgeError
from schemaforge.common import Severity, is_absolute_uri, log_exception, split_curie
from schemaforge.metamodel import LINKML_PREFIX, XSD_PREFIX, SchemaDefinition, SlotDefinition

log = logging.getLogger(__name__)

LINTER_PREFIX = "linter_"
RULES_SECTION = "rules"
RULE_OFF = "off"

_CAMEL_CASE = re.compile(r"[A-Z][A-Za-z0-9]*")
_SNAKE_CASE = re.compile(r"[a-z0-9_]+")


class LintConfigError(SchemaforgeError):
    """The lint configuration names an unknown rule or an unknown setting."""

    pass


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    element: str
    severity: Severity
    message: str

    def to_dict(self):
        return {
            "rule_id": self.rule_id,
            "element": self.element,
            "severity": str(self.severity),
            "message": self.message,
        }

    def __str__(self):
        return f"{self.severity} {self.rule_id} {self.element}: {self.message}"


class RuleSetting(NamedTuple):
    enabled: bool
    severity: Severity


def _slot_elements(schema: SchemaDefinition) -> Iterator[Tuple[str, SlotDefinition]]:
    """Attributes are reported as Class.attribute, after every global slot."""
    yield from schema.slots.items()
    for class_name, class_def in schema.classes.items():
        for name, attribute in class_def.attributes.items():
            yield f"{class_name}.{name}", attribute


def _declaration_order(schema: SchemaDefinition) -> Dict[str, int]:
    names = list(schema.classes)
    names += [name for name, _ in _slot_elements(schema)]
    names += list(schema.enums) + list(schema.types)
    order = {}
    for name in names:
        order.setdefault(name, len(order))
    return order


def is_camel_case(name):
    return _CAMEL_CASE.fullmatch(name) is not None


def is_snake_case(name):
    return _SNAKE_CASE.fullmatch(name) is not None


def linter_missing_description(schema: SchemaDefinition):
    elements = list(schema.classes.items()) + list(_slot_elements(schema))
    elements += list(schema.enums.items()) + list(schema.types.items())
    for name, element in elements:
        if not element.description:
            yield name, "element has no description"


def linter_class_name_not_camelcase(schema: SchemaDefinition):
    for name in schema.classes:
        if not is_camel_case(name):
            yield name, f"class name '{name}' is not CamelCase"


def linter_slot_name_not_snakecase(schema: SchemaDefinition):
    for element, slot in _slot_elements(schema):
        if not is_snake_case(slot.name):
            yield element, f"slot name '{slot.name}' is not snake_case"


def linter_enum_name_not_camelcase(schema: SchemaDefinition):
    for name in schema.enums:
        if not is_camel_case(name):
            yield name, f"enum name '{name}' is not CamelCase"


def linter_missing_range(schema: SchemaDefinition):
    if schema.default_range:
        return
    for element, slot in _slot_elements(schema):
        if not slot.range:
            yield element, "slot has no range and the schema declares no default_range"


def linter_empty_enum(schema: SchemaDefinition):
    for name, enum_def in schema.enums.items():
        if not enum_def.permissible_values:
            yield name, "enum has no permissible values"


def _mapped_references(schema: SchemaDefinition):
    for name, class_def in schema.classes.items():
        if class_def.class_uri:
            yield name, class_def.class_uri
        for mapping in class_def.mappings:
            yield name, mapping.target
    for element, slot in _slot_elements(schema):
        if slot.slot_uri:
            yield element, slot.slot_uri
        for mapping in slot.mappings:
            yield element, mapping.target
    for name, enum_def in schema.enums.items():
        for value in enum_def.permissible_values.values():
            if value.meaning:
                yield name, value.meaning


def linter_undeclared_prefix_in_mapping(schema: SchemaDefinition):
    declared = set(schema.prefixes) | {LINKML_PREFIX, XSD_PREFIX}
    for element, reference in _mapped_references(schema):
        if is_absolute_uri(reference) and "//" in reference:
            continue
        curie = split_curie(reference)
        if curie and curie[0] not in declared:
            yield element, f"'{reference}' uses undeclared prefix '{curie[0]}'"


def _rules():
    return {
        name[len(LINTER_PREFIX) :]: linter
        for name, linter in globals().items()
        if callable(linter) and name.startswith(LINTER_PREFIX)
    }


RULE_IDS = tuple(sorted(_rules()))


class LintConfig:
    """Per-rule switch and severity; every rule is enabled at warning unless configured."""

    def __init__(self, rules: Optional[Dict[str, str]] = None):
        self.rules = {rule_id: RuleSetting(True, Severity.WARNING) for rule_id in RULE_IDS}
        for rule_id, value in (rules or {}).items():
            self.set_rule(rule_id, value)

    def __repr__(self):
        attrs = ", ".join([f"{key}={repr(value)}" for key, value in self.__dict__.items()])
        return f"{self.__class__.__name__}({attrs})"

    def set_rule(self, rule_id, value):
        if rule_id not in self.rules:
            raise LintConfigError(f"unknown lint rule '{rule_id}', known rules: {', '.join(RULE_IDS)}")
        value = str(value).strip().lower()
        if value == RULE_OFF:
            self.rules[rule_id] = RuleSetting(False, Severity.WARNING)
            return
        try:
            self.rules[rule_id] = RuleSetting(True, Severity(value))
        except ValueError:
            raise LintConfigError(f"lint rule '{rule_id}' has setting '{value}', expected off, warning or error")

    @staticmethod
    @log_exception(log, "reading lint configuration file", catch_exception=Exception, raise_on_error=True)
    def from_file(config_file_path):
        config = ConfigParser()
        try:
            if not config.read(config_file_path, encoding="utf-8"):
                raise LintConfigError(f"lint configuration file '{config_file_path}' cannot be read")
        except (ConfigParserError, UnicodeDecodeError) as e:
            raise LintConfigError(f"lint configuration file '{config_file_path}' is malformed: {e}")
        rules = dict(config.items(RULES_SECTION)) if config.has_section(RULES_SECTION) else {}
        return LintConfig(rules)

    @staticmethod
    def disable_all():
        return LintConfig({rule_id: RULE_OFF for rule_id in RULE_IDS})


def lint(schema: SchemaDefinition, config: LintConfig = None) -> List[LintFinding]:
    """Apply every enabled rule; findings are ordered by element declaration, then rule_id."""
    config = config or LintConfig()
    findings = []
    for rule_id, linter in _rules().items():
        setting = config.rules[rule_id]
        if not setting.enabled:
            continue
        for element, message in linter(schema):
            findings.append(LintFinding(rule_id, element, setting.severity, message))
    order = _declaration_order(schema)
    findings.sort(key=lambda finding: (order.get(finding.element, len(order)), finding.rule_id))
    log.debug("Lint of %s produced %d finding(s)", schema.name, len(findings))
    return findings


def has_errors(findings: List[LintFinding]):
    return any(finding.severity == Severity.ERROR for finding in findings)


def findings_to_json(findings: List[LintFinding]):
    document = {"errors": has_errors(findings), "findings": [finding.to_dict() for finding in findings]}
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def findings_to_text(findings: List[LintFinding]):
    return "".join(f"{finding}\n" for finding in findings)
