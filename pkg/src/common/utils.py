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

import itertools
import logging
import os

log = logging.getLogger(__name__)


class SchemaforgeError(Exception):
    """Root of every error raised by the toolkit."""

    pass


def grouper(iterable, n):
    """Slice iterable into chunks of size n."""
    it = iter(iterable)
    while True:
        chunk = tuple(itertools.islice(it, n))
        if not chunk:
            return
        yield chunk


def split_search_path(value):
    """
    Split a search path string into its entries.

    Entries are separated by os.pathsep, empty entries are dropped and the order is preserved.
    Example input: "/opt/schemas:/home/user/schemas"
    Example output: ["/opt/schemas", "/home/user/schemas"]
    """
    if not value:
        return []
    return [entry.strip() for entry in str(value).split(os.pathsep) if entry.strip()]


def read_text(file_path):
    """
    Read a UTF-8 text file.

    :raise SchemaforgeError: when the bytes are not UTF-8
    """
    try:
        with open(file_path, "r", encoding="utf-8") as text_file:
            return text_file.read()
    except UnicodeDecodeError as e:
        log.error("Unable to decode file '%s' as UTF-8: %s", file_path, e)
        raise SchemaforgeError(f"'{file_path}' is not UTF-8 text: {e.reason} at byte {e.start}")
    except Exception as e:
        log.error("Unable to read file from '%s'. Failed with exception: %s", file_path, e)
        raise


def write_text(file_path, text):
    """Write text as UTF-8 with LF line endings, creating parent directories when needed."""
    parent = os.path.dirname(str(file_path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(file_path, "w", encoding="utf-8", newline="\n") as text_file:
        text_file.write(text)
