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
Tabular schema definitions.

A sheet is tab-separated text: a header row, then a descriptor row whose first cell starts with '>' binding each
column to a metamodel field, then data rows. A row naming only a class declares the class; a row naming a class and
a slot declares an attribute of that class.
"""

import csv
import io
import logging
import re
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from common.utils import SchemaforgeError, read_text
from schemaforge.metamodel import (
    BUILTIN_IMPORT_REFERENCES,
    FALLBACK_RANGE,
    LINKML_BASE,
    LINKML_PREFIX,
    ClassDefinition,
    SchemaDefinition,
    SlotDefinition,
    builtin_schema,
    check_structure,
)

log = logging.getLogger(__name__)

CARDINALITY_PATTERN = re.compile(r"(\d+)(?:\.\.(\d+|\*))?")
DESCRIPTOR_MARK = ">"
COMMENT_MARK = "#"
IGNORED_DESCRIPTORS = ("ignore", "-")
DESCRIPTORS = (
    "class",
    "slot",
    "cardinality",
    "required",
    "identifier",
    "range",
    "is_a",
    "mixins",
    "description",
    "pattern",
    "slot_uri",
    "class_uri",
    "examples",
)
# Range tokens of the tabular format that name a built-in type differently.
RANGE_ALIASES = {"uri:curie": "curie", "xsd:string": "string", "xsd:integer": "integer", "xsd:float": "float"}
_TRUE_CELLS = ("true", "yes", "y", "1")
_FALSE_CELLS = ("false", "no", "n", "0")


class CardinalityError(SchemaforgeError):
    """A cardinality string does not follow the min..max grammar."""

    pass


class SheetError(SchemaforgeError):
    """A sheet cannot be converted into a schema."""

    pass


class Cardinality(NamedTuple):
    minimum: int
    # None means unbounded
    maximum: Optional[int]

    @property
    def unbounded(self):
        return self.maximum is None


def parse_cardinality(text) -> Cardinality:
    """
    Parse "a..b", "a..*" or a bare "a"; an empty cell means 0..1.

    :raise CardinalityError: on malformed text, a zero upper bound or min greater than max
    """
    text = (text or "").strip()
    if not text:
        return Cardinality(0, 1)
    match = CARDINALITY_PATTERN.fullmatch(text)
    if match is None:
        raise CardinalityError(f"malformed cardinality '{text}'")
    minimum = int(match.group(1))
    upper = match.group(2)
    if upper is None:
        maximum = minimum
    elif upper == "*":
        maximum = None
    else:
        maximum = int(upper)
    if maximum is not None and maximum < 1:
        raise CardinalityError(f"cardinality '{text}' has no room for a value")
    if maximum is not None and minimum > maximum:
        raise CardinalityError(f"cardinality '{text}' has min greater than max")
    return Cardinality(minimum, maximum)


def format_cardinality(minimum, maximum) -> str:
    return f"{minimum}..{'*' if maximum is None else maximum}"


def _descriptor_cell(descriptor_row, index):
    cell = descriptor_row[index] if index < len(descriptor_row) else ""
    if index == 0 and cell.lstrip().startswith(DESCRIPTOR_MARK):
        cell = cell.lstrip()[len(DESCRIPTOR_MARK) :]
    return cell.strip()


@dataclass(frozen=True)
class SheetDescriptor:
    """Ordered (column header, metamodel descriptor) pairs; ignored columns carry descriptor 'ignore'."""

    columns: Tuple[Tuple[str, str], ...]

    @property
    def column_bindings(self) -> Dict[str, str]:
        return dict(self.columns)

    def index_of(self, descriptor) -> Optional[int]:
        for index, (_, bound) in enumerate(self.columns):
            if bound == descriptor:
                return index
        return None

    @staticmethod
    def from_rows(header: Sequence[str], descriptor_row: Sequence[str]):
        """
        Bind each header to the descriptor in the same column.

        :raise SheetError: on an unknown descriptor, a column without descriptor or a missing class column
        """
        columns = []
        for index, column in enumerate(header):
            column = column.strip()
            descriptor = _descriptor_cell(descriptor_row, index)
            if not descriptor:
                if not column:
                    continue
                raise SheetError(f"column '{column}' has no descriptor, use 'ignore' to skip it")
            if descriptor in IGNORED_DESCRIPTORS:
                descriptor = "ignore"
            elif descriptor not in DESCRIPTORS:
                raise SheetError(f"column '{column}' has unknown descriptor '{descriptor}'")
            columns.append((column, descriptor))
        descriptor = SheetDescriptor(tuple(columns))
        if descriptor.index_of("class") != 0:
            raise SheetError("the first column of a sheet must be bound to 'class'")
        bound = [name for _, name in columns if name != "ignore"]
        duplicates = sorted({name for name in bound if bound.count(name) > 1})
        if duplicates:
            raise SheetError(f"descriptor(s) bound to more than one column: {', '.join(duplicates)}")
        return descriptor


def _is_descriptor_row(row):
    return bool(row) and row[0].lstrip().startswith(DESCRIPTOR_MARK)


def parse_sheet(text) -> Tuple[SheetDescriptor, List[List[str]], List[str]]:
    """Split sheet text into its descriptor, the data rows (descriptor column order) and warnings."""
    reader = csv.reader(io.StringIO(text), delimiter="\t", doublequote=False, quoting=csv.QUOTE_NONE)
    rows = list(reader)
    if len(rows) < 2 or not _is_descriptor_row(rows[1]):
        raise SheetError("a sheet needs a header row followed by a '>' descriptor row")
    header = rows[0]
    descriptor = SheetDescriptor.from_rows(header, rows[1])
    kept_indexes = [
        index for index, column in enumerate(header) if column.strip() or _descriptor_cell(rows[1], index)
    ]
    warnings = []
    data_rows = []
    for line_number, row in enumerate(rows[2:], start=3):
        if _is_descriptor_row(row):
            warnings.append(f"row {line_number}: additional descriptor row ignored")
            log.warning("Sheet row %d: additional descriptor row ignored", line_number)
            continue
        data_rows.append([row[index] if index < len(row) else "" for index in kept_indexes])
    return descriptor, data_rows, warnings


def _parse_flag(cell, column) -> Optional[bool]:
    value = cell.strip().lower()
    if not value:
        return None
    if value in _TRUE_CELLS:
        return True
    if value in _FALSE_CELLS:
        return False
    raise SheetError(f"'{cell}' in column {column} is not a boolean")


def _split_list(cell):
    return tuple(item.strip() for item in re.split(r"[|,]", cell) if item.strip())


class _SheetConverter:
    def __init__(self, descriptor: SheetDescriptor):
        self.descriptor = descriptor
        self.headers = {bound: column for column, bound in descriptor.columns}
        self.warnings = []
        self.class_fields: Dict[str, dict] = {}
        self.attributes: Dict[str, Dict[str, SlotDefinition]] = {}

    def warn(self, message):
        log.warning(message)
        self.warnings.append(message)

    def cell(self, row, descriptor):
        index = self.descriptor.index_of(descriptor)
        if index is None or index >= len(row):
            return ""
        return row[index].strip()

    def declare_class(self, class_name):
        if class_name not in self.class_fields:
            self.class_fields[class_name] = {}
            self.attributes[class_name] = {}

    def class_row(self, row, class_name):
        self.declare_class(class_name)
        fields = self.class_fields[class_name]
        for descriptor in ("description", "is_a", "class_uri"):
            value = self.cell(row, descriptor)
            if value:
                fields[descriptor] = value
        mixins = self.cell(row, "mixins")
        if mixins:
            fields["mixins"] = _split_list(mixins)

    def _required(self, location, cardinality: Cardinality, cardinality_cell, required_cell):
        from_cardinality = cardinality.minimum >= 1
        explicit = _parse_flag(required_cell, self.headers.get("required"))
        if explicit is None:
            return from_cardinality
        if explicit and not from_cardinality and cardinality_cell:
            self.warn(
                f"{location}: required '{required_cell}' contradicts cardinality '{cardinality_cell}', "
                "the required column wins"
            )
            return True
        if not explicit and from_cardinality:
            raise SheetError(f"{location}: required '{required_cell}' conflicts with cardinality '{cardinality_cell}'")
        return explicit

    def slot_row(self, row, class_name, slot_name):
        self.declare_class(class_name)
        location = f"{class_name}.{slot_name}"
        if slot_name in self.attributes[class_name]:
            raise SheetError(f"slot '{slot_name}' is declared twice for class '{class_name}'")

        cardinality_cell = self.cell(row, "cardinality")
        try:
            cardinality = parse_cardinality(cardinality_cell)
        except CardinalityError as e:
            raise SheetError(f"{location}: {e}") from e
        required = self._required(location, cardinality, cardinality_cell, self.cell(row, "required"))
        multivalued = cardinality.unbounded or cardinality.maximum > 1

        identifier = _parse_flag(self.cell(row, "identifier"), self.headers.get("identifier"))
        if identifier is None and "identifier" not in self.headers and slot_name == "id" and not multivalued:
            identifier = True

        range_token = self.cell(row, "range")
        slot_range = RANGE_ALIASES.get(range_token, range_token) or None

        self.attributes[class_name][slot_name] = SlotDefinition(
            name=slot_name,
            description=self.cell(row, "description") or None,
            is_a=self.cell(row, "is_a") or None,
            range=slot_range,
            required=True if required else None,
            multivalued=True if multivalued else None,
            identifier=True if identifier else None,
            pattern=self.cell(row, "pattern") or None,
            slot_uri=self.cell(row, "slot_uri") or None,
            examples=_split_list(self.cell(row, "examples")),
        )

    def convert(self, rows):
        for row in rows:
            if not any(cell.strip() for cell in row):
                continue
            if row[0].lstrip().startswith(COMMENT_MARK):
                continue
            class_name = self.cell(row, "class")
            slot_name = self.cell(row, "slot")
            if not class_name:
                raise SheetError(f"row {row!r} has no class")
            if slot_name:
                self.slot_row(row, class_name, slot_name)
            else:
                self.class_row(row, class_name)

    def check_ranges(self):
        known = set(builtin_schema().types) | set(self.class_fields)
        for class_name, attributes in self.attributes.items():
            for slot in attributes.values():
                if slot.range and slot.range not in known:
                    self.warn(f"{class_name}.{slot.name}: range '{slot.range}' is not defined in the sheet")

    def classes(self):
        return {
            name: ClassDefinition(name=name, attributes=self.attributes[name], **fields)
            for name, fields in self.class_fields.items()
        }


def sheet_to_schema(
    rows, descriptor: SheetDescriptor, schema_id, schema_name, warnings=(), imports=()
) -> SchemaDefinition:
    """
    Convert data rows bound by descriptor into a schema with one class per record name.

    Ranges the sheet does not define are kept for resolution at compile time, typically from one of the extra
    imports, and reported as warnings.

    :raise SheetError: on conflicting required signals, duplicate (class, slot) pairs or malformed cells
    """
    converter = _SheetConverter(descriptor)
    converter.warnings.extend(warnings)
    converter.convert(rows)
    converter.check_ranges()
    base = schema_id if schema_id.endswith(("/", "#")) else f"{schema_id}/"
    schema = SchemaDefinition(
        id=schema_id,
        name=schema_name,
        prefixes={LINKML_PREFIX: LINKML_BASE, schema_name: base},
        default_prefix=schema_name,
        default_range=FALLBACK_RANGE,
        imports=BUILTIN_IMPORT_REFERENCES + tuple(imports),
        classes=converter.classes(),
        diagnostics=tuple(converter.warnings),
    )
    check_structure(schema)
    log.info("Converted sheet into %d classes", len(schema.classes))
    return schema


def load_sheet(file_path, schema_id, schema_name, imports=()) -> SchemaDefinition:
    descriptor, rows, warnings = parse_sheet(read_text(file_path))
    return sheet_to_schema(rows, descriptor, schema_id, schema_name, warnings, imports)
