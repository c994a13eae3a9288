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

import csv
import datetime
import io
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List

from common.utils import read_text
from schemaforge.loader import SchemaParseError, load_yaml_document

log = logging.getLogger(__name__)


class DataFormat(Enum):
    YAML = "yaml"
    JSON = "json"
    TSV = "tsv"
    CSV = "csv"

    def __str__(self):
        return str(self.value)

    @staticmethod
    def from_path(file_path):
        extension = os.path.splitext(str(file_path))[1].lower().lstrip(".")
        if extension == "yml":
            extension = "yaml"
        try:
            return DataFormat(extension)
        except ValueError:
            raise SchemaParseError(f"unsupported data file extension '.{extension}'", str(file_path))


@dataclass(frozen=True)
class DataRecord:
    """One instance of asserted_class; values keep the document order of the input."""

    asserted_class: str
    values: Dict[str, Any] = field(default_factory=dict)


def _normalize(value):
    # The YAML loader turns unquoted dates into date objects; records carry their ISO text instead.
    if isinstance(value, datetime.datetime):
        return value.isoformat()
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, dict):
        return {str(key): _normalize(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_normalize(item) for item in value]
    return value


def _document_to_records(document, target_class, source) -> List[DataRecord]:
    if document is None:
        return []
    if isinstance(document, dict):
        if len(document) == 1:
            (container,) = document.values()
            if isinstance(container, list) and all(isinstance(item, dict) for item in container):
                document = container
        if isinstance(document, dict):
            return [DataRecord(target_class, _normalize(document))]
    if not isinstance(document, list):
        raise SchemaParseError("a data document must be a mapping or a list of mappings", source)
    records = []
    for index, item in enumerate(document):
        if not isinstance(item, dict):
            raise SchemaParseError(f"record {index} is not a mapping", source)
        records.append(DataRecord(target_class, _normalize(item)))
    return records


def _table_to_records(text, delimiter, target_class) -> List[DataRecord]:
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    records = []
    for row in reader:
        values = {}
        for column, cell in row.items():
            if column is None:
                continue
            cell = (cell or "").strip()
            # Empty cells are "not specified".
            if cell:
                values[column.strip()] = cell
        if values:
            records.append(DataRecord(target_class, values))
    return records


def parse_records(text, target_class, data_format: DataFormat, source=None) -> List[DataRecord]:
    if data_format == DataFormat.YAML:
        return _document_to_records(load_yaml_document(text, source), target_class, source)
    if data_format == DataFormat.JSON:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaParseError(e.msg, source, e.lineno, e.colno) from e
        return _document_to_records(document, target_class, source)
    return _table_to_records(text, "\t" if data_format == DataFormat.TSV else ",", target_class)


def load_records(file_path, target_class, data_format: DataFormat = None) -> List[DataRecord]:
    """
    Load the records of a data file, all asserted as target_class.

    YAML and JSON documents hold one record (a mapping), a list of records, or a mapping with a single key whose
    value is the list of records. Delimited tables have a header row of slot names, one record per row; cells are
    text and empty cells are left out.
    """
    data_format = data_format or DataFormat.from_path(file_path)
    records = parse_records(read_text(file_path), target_class, data_format, source=str(file_path))
    log.info("Loaded %d %s record(s) from %s", len(records), target_class, file_path)
    return records
