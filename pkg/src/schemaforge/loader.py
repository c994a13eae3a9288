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

import collections.abc
import dataclasses
import logging
import os
from typing import Dict, Iterator, List, Optional, Tuple

import yaml
from common.utils import SchemaforgeError, read_text, split_search_path
from schemaforge.metamodel import (
    MAPPING_KEYS,
    SCHEMA_KEYS,
    BaseKind,
    ClassDefinition,
    ElementKind,
    EnumDefinition,
    Mapping,
    MappingPredicate,
    PermissibleValue,
    SchemaDefinition,
    SchemaStructureError,
    SlotDefinition,
    TypeDefinition,
    builtin_schema,
    check_references,
    check_structure,
    is_builtin_reference,
)

log = logging.getLogger(__name__)

SCHEMA_PATH_ENV = "SCHEMAFORGE_PATH"
SCHEMA_EXTENSIONS = (".yaml", ".yml")
REMOTE_SCHEMES = ("http://", "https://", "s3://")

_SLOT_FIELDS = {
    "description",
    "is_a",
    "range",
    "required",
    "multivalued",
    "identifier",
    "pattern",
    "minimum_value",
    "maximum_value",
    "unit",
    "slot_uri",
    "examples",
} | set(MAPPING_KEYS)
_CLASS_FIELDS = {
    "description",
    "is_a",
    "mixins",
    "abstract",
    "slots",
    "attributes",
    "slot_usage",
    "class_uri",
} | set(MAPPING_KEYS)
_ENUM_FIELDS = {"description", "permissible_values"}
_PERMISSIBLE_VALUE_FIELDS = {"description", "meaning"}
_TYPE_FIELDS = {"base", "pattern", "description"}


class SchemaParseError(SchemaforgeError):
    """A schema or data document is not well formed."""

    def __init__(self, message, source=None, line=None, column=None):
        self.source = source
        self.line = line
        self.column = column
        location = ""
        if source:
            location = f"{source}:"
        if line is not None:
            location += f"{line}:{column}:"
        super().__init__(f"{location} {message}" if location else message)


class ImportResolutionError(SchemaforgeError):
    """An import reference does not resolve to a schema document."""

    pass


class ImportCycleError(SchemaforgeError):
    """The import graph contains a cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"import cycle: {' -> '.join(self.cycle)}")


class PrefixConflictError(SchemaforgeError):
    """The same prefix is declared with two different URI bases."""

    def __init__(self, prefix, first_base, second_base):
        self.prefix = prefix
        self.bases = (first_base, second_base)
        super().__init__(f"prefix '{prefix}' is declared as both '{first_base}' and '{second_base}'")


class _UniqueKeyLoader(yaml.SafeLoader):
    """Safe loader that rejects duplicate mapping keys instead of keeping the last one."""

    def construct_mapping(self, node, deep=False):
        if isinstance(node, yaml.MappingNode):
            seen = set()
            for key_node, _ in node.value:
                if key_node.tag == "tag:yaml.org,2002:merge":
                    continue
                key = self.construct_object(key_node, deep=deep)
                try:
                    duplicate = key in seen
                except TypeError:
                    continue
                if duplicate:
                    raise yaml.constructor.ConstructorError(
                        "while constructing a mapping",
                        node.start_mark,
                        f"found duplicate key '{key}'",
                        key_node.start_mark,
                    )
                seen.add(key)
        return super().construct_mapping(node, deep=deep)


def load_yaml_document(text, source=None):
    """
    Load one YAML document with the safe loader, mapping syntax errors to SchemaParseError.

    The error carries the 1-based line and column of the problem when PyYAML reports one.
    """
    try:
        return yaml.load(text, Loader=_UniqueKeyLoader)  # nosec B506 - safe loader subclass
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        problem = e.problem or str(e)
        if mark is not None:
            raise SchemaParseError(problem, source, mark.line + 1, mark.column + 1) from e
        raise SchemaParseError(problem, source) from e
    except yaml.YAMLError as e:
        raise SchemaParseError(str(e), source) from e


class _Parser:
    """Turns the plain data of one schema document into metamodel values, collecting diagnostics."""

    def __init__(self, source):
        self.source = source
        self.diagnostics = []

    def fail(self, path, message):
        raise SchemaParseError(f"{path}: {message}", self.source)

    def warn(self, message):
        where = f"{self.source}: " if self.source else ""
        log.warning("%s%s", where, message)
        self.diagnostics.append(message)

    def check_keys(self, path, data, allowed):
        for key in data:
            if key in allowed:
                continue
            if isinstance(key, str) and "." in key and key.replace(".", "_") in allowed:
                self.warn(f"{path}: unsupported alias '{key}', use '{key.replace('.', '_')}'")
            else:
                self.warn(f"{path}: unrecognized key '{key}' ignored")

    def mapping(self, path, value):
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, found {type(value).__name__}")
        return value

    def text(self, path, value, optional=True):
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            self.fail(path, f"expected text, found {type(value).__name__}")
        return str(value)

    def flag(self, path, value):
        if value is None:
            return None
        if not isinstance(value, bool):
            self.fail(path, f"expected true or false, found '{value}'")
        return value

    def number(self, path, value):
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, found '{value}'")
        return value

    def text_list(self, path, value):
        if value is None:
            return ()
        if isinstance(value, str):
            return (value,)
        if not isinstance(value, list):
            self.fail(path, f"expected a list, found {type(value).__name__}")
        return tuple(self.text(f"{path}/{index}", item, optional=False) for index, item in enumerate(value))

    def mappings(self, path, data):
        mappings = []
        for predicate in MappingPredicate:
            for target in self.text_list(f"{path}/{predicate.key}", data.get(predicate.key)):
                mappings.append(Mapping(predicate, target))
        return tuple(mappings)

    def examples(self, path, value):
        if value is None:
            return ()
        if not isinstance(value, list):
            value = [value]
        examples = []
        for index, item in enumerate(value):
            # Long form: {value: ..., description: ...}
            if isinstance(item, dict):
                item = item.get("value")
            examples.append(self.text(f"{path}/{index}", item, optional=False))
        return tuple(examples)

    def slot(self, path, name, data):
        data = self.mapping(path, data)
        self.check_keys(path, data, _SLOT_FIELDS)
        return SlotDefinition(
            name=name,
            description=self.text(f"{path}/description", data.get("description")),
            is_a=self.text(f"{path}/is_a", data.get("is_a")),
            range=self.text(f"{path}/range", data.get("range")),
            required=self.flag(f"{path}/required", data.get("required")),
            multivalued=self.flag(f"{path}/multivalued", data.get("multivalued")),
            identifier=self.flag(f"{path}/identifier", data.get("identifier")),
            pattern=self.text(f"{path}/pattern", data.get("pattern")),
            minimum_value=self.number(f"{path}/minimum_value", data.get("minimum_value")),
            maximum_value=self.number(f"{path}/maximum_value", data.get("maximum_value")),
            unit=self.text(f"{path}/unit", data.get("unit")),
            slot_uri=self.text(f"{path}/slot_uri", data.get("slot_uri")),
            examples=self.examples(f"{path}/examples", data.get("examples")),
            mappings=self.mappings(path, data),
        )

    def slot_map(self, path, value):
        return {
            str(name): self.slot(f"{path}/{name}", str(name), body) for name, body in self.mapping(path, value).items()
        }

    def class_definition(self, path, name, data):
        data = self.mapping(path, data)
        self.check_keys(path, data, _CLASS_FIELDS)
        return ClassDefinition(
            name=name,
            description=self.text(f"{path}/description", data.get("description")),
            is_a=self.text(f"{path}/is_a", data.get("is_a")),
            mixins=self.text_list(f"{path}/mixins", data.get("mixins")),
            abstract=bool(self.flag(f"{path}/abstract", data.get("abstract"))),
            slots=self.text_list(f"{path}/slots", data.get("slots")),
            attributes=self.slot_map(f"{path}/attributes", data.get("attributes")),
            slot_usage=self.slot_map(f"{path}/slot_usage", data.get("slot_usage")),
            class_uri=self.text(f"{path}/class_uri", data.get("class_uri")),
            mappings=self.mappings(path, data),
        )

    def enum(self, path, name, data):
        data = self.mapping(path, data)
        self.check_keys(path, data, _ENUM_FIELDS)
        raw_values = data.get("permissible_values")
        if isinstance(raw_values, list):
            raw_values = {item: None for item in raw_values}
        values = {}
        for text, body in self.mapping(f"{path}/permissible_values", raw_values).items():
            text = str(text)
            value_path = f"{path}/permissible_values/{text}"
            body = self.mapping(value_path, body)
            self.check_keys(value_path, body, _PERMISSIBLE_VALUE_FIELDS)
            values[text] = PermissibleValue(
                text=text,
                description=self.text(f"{value_path}/description", body.get("description")),
                meaning=self.text(f"{value_path}/meaning", body.get("meaning")),
            )
        return EnumDefinition(
            name=name,
            description=self.text(f"{path}/description", data.get("description")),
            permissible_values=values,
        )

    def type_definition(self, path, name, data):
        data = self.mapping(path, data)
        self.check_keys(path, data, _TYPE_FIELDS)
        base = self.text(f"{path}/base", data.get("base"), optional=False)
        try:
            base_kind = BaseKind(base)
        except ValueError:
            self.fail(f"{path}/base", f"'{base}' is not one of {', '.join(kind.value for kind in BaseKind)}")
        return TypeDefinition(
            name=name,
            base=base_kind,
            pattern=self.text(f"{path}/pattern", data.get("pattern")),
            description=self.text(f"{path}/description", data.get("description")),
        )

    def schema(self, data):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise SchemaParseError("top level of a schema document must be a mapping", self.source)
        for required_key in ("id", "name"):
            if data.get(required_key) in (None, ""):
                raise SchemaParseError(f"missing required key: {required_key}", self.source)
        self.check_keys("", data, set(SCHEMA_KEYS))
        prefixes = {
            str(prefix): self.text(f"prefixes/{prefix}", _prefix_base(base), optional=False)
            for prefix, base in self.mapping("prefixes", data.get("prefixes")).items()
        }
        return SchemaDefinition(
            id=self.text("id", data["id"], optional=False),
            name=self.text("name", data["name"], optional=False),
            title=self.text("title", data.get("title")),
            license=self.text("license", data.get("license")),
            version=self.text("version", data.get("version")),
            prefixes=prefixes,
            default_prefix=self.text("default_prefix", data.get("default_prefix")),
            default_range=self.text("default_range", data.get("default_range")),
            imports=self.text_list("imports", data.get("imports")),
            classes={
                str(name): self.class_definition(f"classes/{name}", str(name), body)
                for name, body in self.mapping("classes", data.get("classes")).items()
            },
            slots=self.slot_map("slots", data.get("slots")),
            enums={
                str(name): self.enum(f"enums/{name}", str(name), body)
                for name, body in self.mapping("enums", data.get("enums")).items()
            },
            types={
                str(name): self.type_definition(f"types/{name}", str(name), body)
                for name, body in self.mapping("types", data.get("types")).items()
            },
            diagnostics=tuple(self.diagnostics),
        )


def _prefix_base(value):
    # Long form: {prefix_prefix: ..., prefix_reference: ...}
    if isinstance(value, dict):
        return value.get("prefix_reference")
    return value


def parse_schema(text, source=None) -> SchemaDefinition:
    """
    Parse a schema document into an unresolved SchemaDefinition.

    Unrecognized keys become diagnostics on the result. Structural invariants are checked before returning.
    """
    parser = _Parser(source)
    schema = parser.schema(load_yaml_document(text, source))
    check_structure(schema)
    log.debug("Parsed schema %s with %d classes and %d slots", schema.name, len(schema.classes), len(schema.slots))
    return schema


def parse_schema_file(file_path) -> SchemaDefinition:
    return parse_schema(read_text(file_path), source=str(file_path))


class PrefixMap(collections.abc.Mapping):
    """Immutable prefix to URI base map."""

    def __init__(self, prefixes=None):
        self._prefixes = dict(prefixes or {})

    def __getitem__(self, prefix):
        return self._prefixes[prefix]

    def __iter__(self) -> Iterator[str]:
        return iter(self._prefixes)

    def __len__(self):
        return len(self._prefixes)

    def __repr__(self):
        return f"PrefixMap({self._prefixes!r})"


def merge_prefixes(prefix_maps) -> Dict[str, str]:
    """Union prefix declarations in order; identical redeclarations merge, differing bases raise."""
    merged = {}
    for prefixes in prefix_maps:
        for prefix, base in prefixes.items():
            if prefix in merged and merged[prefix] != base:
                raise PrefixConflictError(prefix, merged[prefix], base)
            merged.setdefault(prefix, base)
    return merged


def build_prefix_map(schema: SchemaDefinition) -> PrefixMap:
    """Return the prefix map of a schema, always including the built-in prefixes."""
    return PrefixMap(merge_prefixes([schema.prefixes, builtin_schema().prefixes]))


def _is_remote(location):
    return str(location).startswith(REMOTE_SCHEMES)


def _join_location(root, name):
    if _is_remote(root):
        return f"{root.rstrip('/')}/{name}"
    return os.path.join(root, name)


def _parent_location(location):
    if _is_remote(location):
        return location.rsplit("/", 1)[0]
    return os.path.dirname(os.path.abspath(location))


class ImportResolver:
    """
    Locates and parses imported schema documents.

    A reference is looked up as <reference>.yaml then <reference>.yml, first next to the importing document and then
    under each search root in order. Roots given as http(s):// or s3:// URLs are only consulted when remote imports
    are allowed.
    """

    def __init__(self, search_roots=None, allow_remote=False, fetcher=None, use_environment=True):
        roots = list(search_roots or [])
        if use_environment:
            roots.extend(split_search_path(os.environ.get(SCHEMA_PATH_ENV)))
        self.search_roots = roots
        self.allow_remote = allow_remote
        self.fetcher = fetcher
        self.loaded: Dict[str, SchemaDefinition] = {}

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(search_roots={self.search_roots!r}, allow_remote={self.allow_remote}, "
            f"loaded={list(self.loaded)!r})"
        )

    def _candidate_names(self, reference):
        if reference.endswith(SCHEMA_EXTENSIONS):
            return [reference]
        return [f"{reference}{extension}" for extension in SCHEMA_EXTENSIONS]

    def _read(self, location) -> Optional[str]:
        if _is_remote(location):
            if not self.allow_remote:
                return None
            if self.fetcher is None:
                from schemaforge.remote import RemoteFetcher

                self.fetcher = RemoteFetcher()
            return self.fetcher.fetch(location)
        if os.path.isfile(location):
            return read_text(location)
        return None

    def candidate_locations(self, reference, base_dir=None) -> List[str]:
        if _is_remote(reference):
            return [reference] if reference.endswith(SCHEMA_EXTENSIONS) else self._candidate_names(reference)
        if os.path.isabs(reference):
            return self._candidate_names(reference)
        roots = ([base_dir] if base_dir else []) + self.search_roots
        return [_join_location(root, name) for root in roots for name in self._candidate_names(reference)]

    def resolve(self, reference, base_dir=None) -> Tuple[str, SchemaDefinition]:
        """
        Return (location, schema) for an import reference.

        :raise ImportResolutionError: when no candidate location holds a document
        """
        if is_builtin_reference(reference):
            return reference, builtin_schema()
        if _is_remote(reference) and not self.allow_remote:
            raise ImportResolutionError(f"import '{reference}' is remote and remote imports are disabled")
        candidates = self.candidate_locations(reference, base_dir)
        for location in candidates:
            if location in self.loaded:
                return location, self.loaded[location]
            text = self._read(location)
            if text is None:
                continue
            log.info("Loading import '%s' from %s", reference, location)
            schema = parse_schema(text, source=location)
            self.loaded[location] = schema
            return location, schema
        raise ImportResolutionError(
            f"unable to resolve import '{reference}', tried: {', '.join(candidates) or 'no search roots'}"
        )


def _stamp(elements, schema_id):
    return {
        name: element if element.from_schema else dataclasses.replace(element, from_schema=schema_id)
        for name, element in elements.items()
    }


def _import_closure(root, resolver, base_dir) -> List[SchemaDefinition]:
    """Depth-first post-order list of the imported schemas, root excluded."""
    order = []
    done = set()

    def visit(schema, directory, stack):
        for reference in schema.imports:
            if is_builtin_reference(reference):
                continue
            location, child = resolver.resolve(reference, directory)
            stack_ids = [member.id for member in stack]
            if child.id in stack_ids:
                names = [member.name for member in stack[stack_ids.index(child.id) :]] + [child.name]
                raise ImportCycleError(names)
            if child.id in done:
                continue
            visit(child, _parent_location(location), stack + [child])
            done.add(child.id)
            order.append(child)

    visit(root, base_dir, [root])
    return order


def resolve_imports(root: SchemaDefinition, resolver: ImportResolver = None, base_dir=None) -> SchemaDefinition:
    """
    Merge the import closure of root into one schema.

    Built-in types come first, imported schemas follow in depth-first post-order and root comes last. A later
    definition replaces an earlier one with the same name, with a warning when the two differ. A name that changes
    element kind across schemas is an error.

    :raise ImportResolutionError, ImportCycleError, PrefixConflictError, SchemaStructureError
    """
    resolver = resolver or ImportResolver()
    closure = [builtin_schema()] + [s for s in _import_closure(root, resolver, base_dir) if s.id != root.id]
    closure.append(root)

    diagnostics = list(root.diagnostics)
    merged_maps = {kind: {} for kind in ElementKind}
    owner = {}
    for schema in closure:
        if schema is not root:
            diagnostics.extend(f"{schema.name}: {message}" for message in schema.diagnostics)
        for kind, elements in schema.element_maps():
            for name, element in _stamp(elements, schema.id).items():
                if name in owner and owner[name][0] != kind:
                    raise SchemaStructureError(
                        f"'{name}' is a {owner[name][0]} in {owner[name][1]} and a {kind} in {schema.name}"
                    )
                previous = merged_maps[kind].get(name)
                if previous is not None and dataclasses.replace(previous, from_schema=None) != dataclasses.replace(
                    element, from_schema=None
                ):
                    message = f"{kind} '{name}' from {schema.name} overrides the definition from {owner[name][1]}"
                    log.warning(message)
                    diagnostics.append(message)
                merged_maps[kind][name] = element
                owner[name] = (kind, schema.name)

    prefixes = merge_prefixes([root.prefixes] + [schema.prefixes for schema in closure])
    merged = dataclasses.replace(
        root,
        prefixes=prefixes,
        classes=merged_maps[ElementKind.CLASS],
        slots=merged_maps[ElementKind.SLOT],
        enums=merged_maps[ElementKind.ENUM],
        types=merged_maps[ElementKind.TYPE],
        diagnostics=tuple(dict.fromkeys(diagnostics)),
    )
    check_references(merged)
    log.info(
        "Resolved %s with %d imported schema(s): %d classes, %d slots, %d enums, %d types",
        root.name,
        len(closure) - 1,
        len(merged.classes),
        len(merged.slots),
        len(merged.enums),
        len(merged.types),
    )
    return merged
