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
from collections import namedtuple
from pathlib import Path
from textwrap import dedent

from botocore.exceptions import ClientError
from schemaforge.loader import parse_schema

CORPUS_DIR = Path(__file__).parent.parent / "corpus"

MockedBoto3Request = namedtuple(
    "MockedBoto3Request", ["method", "response", "expected_params", "generate_error", "error_code"]
)
# Defaults apply to the rightmost fields: generate_error = False and error_code = None
MockedBoto3Request.__new__.__defaults__ = (False, None)


def read_text(path):
    """Read the content of a file."""
    with path.open(encoding="utf-8") as f:
        return f.read()


def client_error(error_code):
    return ClientError({"Error": {"Code": error_code}}, "failed_operation")


SCHEMA_HEADER = """\
id: https://example.org/test
name: test
prefixes:
  linkml: https://w3id.org/linkml/
  test: https://example.org/test/
  ex: https://example.org/terms/
default_prefix: test
default_range: string
imports:
  - linkml:types
"""


def schema_text(body):
    """Schema document text: a fixed header followed by the dedented body."""
    return SCHEMA_HEADER + dedent(body)


def parse_test_schema(body):
    return parse_schema(schema_text(body), source="test.yaml")
