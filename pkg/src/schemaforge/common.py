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

import functools
import logging
import re
from enum import Enum

# Element names: identifier characters, internal single spaces allowed, compared byte-exact.
IDENTIFIER_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?: [A-Za-z0-9_]+)*")
PREFIX_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")

# Value-level patterns shared by the validator and the JSON Schema generator, which must agree on them.
CURIE_VALUE_PATTERN = r"[A-Za-z_][A-Za-z0-9_.\-]*:\S*"
URI_VALUE_PATTERN = r"[A-Za-z][A-Za-z0-9+.\-]*:\S+"
DATE_VALUE_PATTERN = r"\d{4}-\d{2}-\d{2}"
DATETIME_VALUE_PATTERN = r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:\d{2})?"
INTEGER_TEXT_PATTERN = re.compile(r"[+-]?\d+")
DECIMAL_TEXT_PATTERN = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")

ABSOLUTE_URI_PATTERN = re.compile(URI_VALUE_PATTERN)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self):
        return str(self.value)


def log_exception(
    logger,
    action_desc,
    log_level=logging.ERROR,
    catch_exception=Exception,
    raise_on_error=True,
    exception_to_raise=None,
):
    def _log_exception(function):
        @functools.wraps(function)
        def wrapper(*args, **kwargs):
            try:
                return function(*args, **kwargs)
            except catch_exception as e:
                logger.log(log_level, "Failed when %s with exception %s, message: %s", action_desc, type(e).__name__, e)
                if raise_on_error:
                    if exception_to_raise:
                        raise exception_to_raise
                    else:
                        raise

        return wrapper

    return _log_exception


def is_valid_name(name):
    """Check an element name against the identifier grammar."""
    return isinstance(name, str) and IDENTIFIER_PATTERN.fullmatch(name) is not None


def is_absolute_uri(value):
    return isinstance(value, str) and ABSOLUTE_URI_PATTERN.fullmatch(value) is not None


def split_curie(value):
    """
    Split a CURIE into (prefix, local part).

    Return None when the value has no colon or the prefix is not a valid prefix name.
    """
    if not isinstance(value, str) or ":" not in value:
        return None
    prefix, _, local = value.partition(":")
    if not PREFIX_PATTERN.fullmatch(prefix):
        return None
    return prefix, local
