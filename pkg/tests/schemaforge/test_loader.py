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
import os
from textwrap import dedent

import pytest
from assertpy import assert_that
from schemaforge.loader import (
    SCHEMA_PATH_ENV,
    ImportCycleError,
    ImportResolutionError,
    ImportResolver,
    PrefixConflictError,
    SchemaParseError,
    build_prefix_map,
    load_yaml_document,
    merge_prefixes,
    parse_schema,
    parse_schema_file,
    resolve_imports,
)
from schemaforge.metamodel import BUILTIN_SCHEMA_ID, SchemaStructureError

from tests.common import parse_test_schema, schema_text


def _write_schema(directory, name, body, prefixes=None):
    prefix_lines = "".join(f"  {prefix}: {base}\n" for prefix, base in (prefixes or {}).items())
    text = (
        f"id: https://example.org/{name}\n"
        f"name: {name}\n"
        "prefixes:\n"
        "  linkml: https://w3id.org/linkml/\n"
        f"{prefix_lines}"
        f"{dedent(body)}"
    )
    path = directory / f"{name}.yaml"
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "text, expected_message",
    [
        ("name: test\n", "missing required key: id"),
        ("id: https://example.org/test\n", "missing required key: name"),
        ("- id: https://example.org/test\n", "top level of a schema document must be a mapping"),
    ],
)
def test_parse_schema_rejects_incomplete_documents(text, expected_message):
    with pytest.raises(SchemaParseError, match=expected_message):
        parse_schema(text)


def test_syntax_error_reports_line_and_column():
    with pytest.raises(SchemaParseError) as exc_info:
        load_yaml_document("id: x\nclasses:\n  Sample: [unclosed\n", source="broken.yaml")

    assert_that(exc_info.value.source).is_equal_to("broken.yaml")
    assert_that(exc_info.value.line).is_greater_than(1)
    assert_that(exc_info.value.column).is_not_none()
    assert_that(str(exc_info.value)).starts_with(f"broken.yaml:{exc_info.value.line}:")


def test_duplicate_keys_are_rejected():
    with pytest.raises(SchemaParseError, match="found duplicate key 'Sample'"):
        parse_schema(schema_text("classes:\n  Sample: {}\n  Sample: {}\n"))


@pytest.mark.parametrize(
    "body, expected_message",
    [
        ("types:\n  Code:\n    base: text\n", "types/Code/base: 'text' is not one of string, integer"),
        ("slots:\n  depth:\n    required: 'yes'\n", "slots/depth/required: expected true or false, found 'yes'"),
        ("slots:\n  depth:\n    minimum_value: low\n", "slots/depth/minimum_value: expected a number, found 'low'"),
        ("classes: [Sample]\n", "classes: expected a mapping, found list"),
    ],
)
def test_parse_schema_rejects_malformed_values(body, expected_message):
    with pytest.raises(SchemaParseError) as exc_info:
        parse_test_schema(body)
    assert_that(str(exc_info.value)).contains(expected_message)


def test_unrecognized_keys_become_diagnostics(caplog):
    schema = parse_test_schema(
        """
        classes:
          Sample:
            colour: green
            slots: [depth]
        slots:
          depth:
            minimum.value: 0
        """
    )

    assert_that(schema.diagnostics).contains(
        "classes/Sample: unrecognized key 'colour' ignored",
        "slots/depth: unsupported alias 'minimum.value', use 'minimum_value'",
    )
    assert_that(schema.slots["depth"].minimum_value).is_none()
    assert_that(caplog.text).contains("unrecognized key 'colour'")


def test_parse_schema_reads_long_forms():
    schema = parse_schema(
        dedent(
            """
            id: https://example.org/test
            name: test
            prefixes:
              ENVO:
                prefix_prefix: ENVO
                prefix_reference: http://purl.obolibrary.org/obo/ENVO_
            slots:
              depth:
                examples:
                  - value: "5"
                    description: five
                  - "10"
                exact_mappings: MIXS:0000018
            enums:
              Units:
                permissible_values: [cm, m]
            """
        )
    )

    assert_that(schema.slots["depth"].examples).is_equal_to(("5", "10"))
    assert_that(schema.slots["depth"].mappings[0].target).is_equal_to("MIXS:0000018")
    assert_that(list(schema.enums["Units"].permissible_values)).is_equal_to(["cm", "m"])


def test_parse_schema_file_keeps_document_order(schemas_dir):
    schema = parse_schema_file(schemas_dir / "environmental_sample.yaml")

    assert_that(schema.classes["Sample"].slots).is_equal_to(
        ("id", "environment_type", "latitude", "longitude", "depth", "depth_units", "k")
    )
    assert_that(schema.imports).is_equal_to(("linkml:types", "environment_types"))
    assert_that(schema.diagnostics).is_empty()


def test_merge_prefixes():
    assert_that(merge_prefixes([{"a": "https://a/"}, {"a": "https://a/", "b": "https://b/"}])).is_equal_to(
        {"a": "https://a/", "b": "https://b/"}
    )
    with pytest.raises(PrefixConflictError) as exc_info:
        merge_prefixes([{"a": "https://a/"}, {"a": "https://other/"}])
    assert_that(exc_info.value.bases).is_equal_to(("https://a/", "https://other/"))


def test_build_prefix_map_includes_builtin_prefixes():
    prefix_map = build_prefix_map(parse_test_schema(""))

    assert_that(dict(prefix_map)).contains_key("linkml", "xsd", "test", "ex")
    assert_that(prefix_map["xsd"]).is_equal_to("http://www.w3.org/2001/XMLSchema#")


class TestImportResolver:
    def test_builtin_reference(self):
        location, schema = ImportResolver(use_environment=False).resolve("linkml:types")

        assert_that(location).is_equal_to("linkml:types")
        assert_that(schema.id).is_equal_to(BUILTIN_SCHEMA_ID)

    def test_sibling_directory_before_search_roots(self, tmp_path):
        sibling_dir, root_dir = tmp_path / "sibling", tmp_path / "root"
        sibling_dir.mkdir()
        root_dir.mkdir()
        _write_schema(sibling_dir, "shared", "")
        _write_schema(root_dir, "shared", "")

        resolver = ImportResolver([str(root_dir)], use_environment=False)
        location, schema = resolver.resolve("shared", str(sibling_dir))

        assert_that(location).is_equal_to(os.path.join(str(sibling_dir), "shared.yaml"))
        assert_that(schema.name).is_equal_to("shared")
        assert_that(resolver.loaded).contains_key(location)

    def test_yml_extension_is_found(self, tmp_path):
        (tmp_path / "units.yml").write_text("id: https://example.org/units\nname: units\n", encoding="utf-8")

        location, _ = ImportResolver([str(tmp_path)], use_environment=False).resolve("units")

        assert_that(location).ends_with("units.yml")

    def test_environment_search_path(self, schemas_dir, monkeypatch):
        monkeypatch.setenv(SCHEMA_PATH_ENV, f"/does/not/exist{os.pathsep}{schemas_dir}")

        resolver = ImportResolver()
        _, schema = resolver.resolve("environment_types")

        assert_that(resolver.search_roots).is_equal_to(["/does/not/exist", str(schemas_dir)])
        assert_that(schema.enums).contains_key("EnvironmentTypeEnum", "UnitsEnum")

    def test_unresolvable_reference_lists_candidates(self, tmp_path):
        resolver = ImportResolver([str(tmp_path)], use_environment=False)

        with pytest.raises(ImportResolutionError) as exc_info:
            resolver.resolve("missing")
        assert_that(str(exc_info.value)).contains("unable to resolve import 'missing'", "missing.yaml", "missing.yml")

    def test_remote_reference_needs_remote_imports(self):
        with pytest.raises(ImportResolutionError, match="remote imports are disabled"):
            ImportResolver(use_environment=False).resolve("https://example.org/schemas/units.yaml")

    def test_remote_reference_uses_fetcher(self, mocker):
        fetcher = mocker.MagicMock()
        fetcher.fetch.return_value = "id: https://example.org/units\nname: units\n"
        resolver = ImportResolver(allow_remote=True, fetcher=fetcher, use_environment=False)

        location, schema = resolver.resolve("https://example.org/schemas/units")

        fetcher.fetch.assert_called_once_with("https://example.org/schemas/units.yaml")
        assert_that(location).is_equal_to("https://example.org/schemas/units.yaml")
        assert_that(schema.name).is_equal_to("units")


def test_resolve_imports_merges_the_closure(schemas_dir, resolver):
    root = parse_schema_file(schemas_dir / "environmental_sample.yaml")

    merged = resolve_imports(root, resolver, base_dir=str(schemas_dir))

    assert_that(list(merged.enums)).is_equal_to(["EnvironmentTypeEnum", "UnitsEnum"])
    assert_that(merged.enums["UnitsEnum"].from_schema).is_equal_to(
        "https://w3id.org/environmental-sample-schema/environment_types"
    )
    assert_that(merged.slots["depth"].from_schema).is_equal_to(root.id)
    assert_that(merged.types["float"].from_schema).is_equal_to(BUILTIN_SCHEMA_ID)
    assert_that(merged.prefixes).contains_key("environment_types", "xsd", "MIXS")
    assert_that(merged.id).is_equal_to(root.id)


def test_import_closure_is_post_order(tmp_path):
    _write_schema(tmp_path, "base", "enums:\n  Units:\n    permissible_values: [cm]\n")
    _write_schema(tmp_path, "middle", "imports: [base]\nenums:\n  Colours:\n    permissible_values: [red]\n")
    root = parse_schema_file(_write_schema(tmp_path, "top", "imports: [linkml:types, middle, base]\n"))

    merged = resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))

    assert_that(list(merged.enums)).is_equal_to(["Units", "Colours"])


def test_import_cycle_is_reported(tmp_path):
    _write_schema(tmp_path, "second", "imports: [first]\n")
    root = parse_schema_file(_write_schema(tmp_path, "first", "imports: [second]\n"))

    with pytest.raises(ImportCycleError) as exc_info:
        resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))
    assert_that(exc_info.value.cycle).is_equal_to(["first", "second", "first"])


def test_conflicting_prefix_across_imports(tmp_path):
    _write_schema(tmp_path, "other", "", prefixes={"ex": "https://other.org/"})
    root = parse_schema_file(_write_schema(tmp_path, "main", "imports: [other]\n", prefixes={"ex": "https://ex.org/"}))

    with pytest.raises(PrefixConflictError, match="prefix 'ex'"):
        resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))


def test_local_definition_overrides_import_with_diagnostic(tmp_path, caplog):
    _write_schema(tmp_path, "units", "enums:\n  Units:\n    permissible_values: [cm]\n")
    root = parse_schema_file(
        _write_schema(tmp_path, "main", "imports: [units]\nenums:\n  Units:\n    permissible_values: [cm, m]\n")
    )

    merged = resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))

    assert_that(list(merged.enums["Units"].permissible_values)).is_equal_to(["cm", "m"])
    assert_that(merged.diagnostics).contains("enum 'Units' from main overrides the definition from units")
    assert_that(caplog.text).contains("overrides the definition")


def test_element_changing_kind_across_imports(tmp_path):
    _write_schema(tmp_path, "units", "enums:\n  Units:\n    permissible_values: [cm]\n")
    root = parse_schema_file(_write_schema(tmp_path, "main", "imports: [units]\nclasses:\n  Units: {}\n"))

    with pytest.raises(SchemaStructureError, match="'Units' is a enum in units and a class in main"):
        resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))


def test_import_diagnostics_are_prefixed_with_schema_name(tmp_path):
    _write_schema(tmp_path, "units", "enums:\n  Units:\n    colour: red\n")
    root = parse_schema_file(_write_schema(tmp_path, "main", "imports: [units]\n"))

    merged = resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))

    assert_that(merged.diagnostics).is_equal_to(("units: enums/Units: unrecognized key 'colour' ignored",))


def test_unresolved_range_after_merge(tmp_path):
    root = parse_schema_file(_write_schema(tmp_path, "main", "slots:\n  depth:\n    range: Length\n"))

    with pytest.raises(SchemaStructureError, match="slots/depth: range 'Length' is not a type, class or enum"):
        resolve_imports(root, ImportResolver(use_environment=False), base_dir=str(tmp_path))
