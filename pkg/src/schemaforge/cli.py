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

import argparse
import json
import logging
import os
import sys
from configparser import ConfigParser
from configparser import Error as ConfigParserError
from logging.config import fileConfig

from botocore.config import Config
from common.utils import SchemaforgeError, split_search_path, write_text
from schemaforge import __version__
from schemaforge.common import log_exception
from schemaforge.generators import GeneratorOptions, GeneratorTarget, generate
from schemaforge.induction import UnknownClassError, load_schema
from schemaforge.linter import LintConfig, findings_to_json, findings_to_text, has_errors, lint
from schemaforge.loader import SCHEMA_PATH_ENV, ImportResolver, parse_schema_file
from schemaforge.mapper import derive_schema, load_transform_spec, transform_collection
from schemaforge.metamodel import dump_yaml, serialize_schema
from schemaforge.records import load_records
from schemaforge.sheets import format_cardinality, load_sheet
from schemaforge.validator import PLUGINS, Validator

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

CONFIG_SECTION = "schemaforge"
DEFAULT_CONFIG_FILE = os.path.join(os.path.expanduser("~"), ".schemaforge", "schemaforge.conf")
LOG_FORMAT = "%(asctime)s - [%(name)s:%(funcName)s] - %(levelname)s - %(message)s"


class ConfigurationError(SchemaforgeError):
    """The schemaforge configuration file is malformed."""

    pass


class SchemaforgeConfig:
    DEFAULTS = {
        "search_paths": "",
        "allow_remote_imports": False,
        "remote_timeout": 30,
        "remote_max_attempts": 3,
        "region": None,
        "proxy": "NONE",
        "max_retry": 1,
        "coerce": False,
        "workers": 1,
        "lint_config": None,
        "logging_config": os.path.join(os.path.dirname(__file__), "logging", "schemaforge_logging.conf"),
    }

    def __init__(self, config_file_path=None):
        self._get_config(config_file_path)

    def __repr__(self):
        attrs = ", ".join(["{key}={value}".format(key=key, value=repr(value)) for key, value in self.__dict__.items()])
        return "{class_name}({attrs})".format(class_name=self.__class__.__name__, attrs=attrs)

    @log_exception(
        log, "reading schemaforge configuration", catch_exception=(IOError, ConfigurationError), raise_on_error=True
    )
    def _get_config(self, config_file_path):
        """Read the configuration; a missing file leaves every setting at its default."""
        config = ConfigParser()
        try:
            if config_file_path and os.path.isfile(config_file_path):
                log.info("Reading %s", config_file_path)
                with open(config_file_path, "r", encoding="utf-8") as config_file:
                    config.read_file(config_file)
            else:
                log.debug("Configuration file %s not found, using defaults", config_file_path)
            self._read_settings(config)
        except (ConfigParserError, ValueError) as e:
            raise ConfigurationError(f"configuration file '{config_file_path}' is malformed: {e}")
        log.debug(self.__repr__())

    def _read_settings(self, config):
        self.search_paths = split_search_path(
            config.get(CONFIG_SECTION, "search_paths", fallback=self.DEFAULTS.get("search_paths"))
        )
        self.allow_remote_imports = config.getboolean(
            CONFIG_SECTION, "allow_remote_imports", fallback=self.DEFAULTS.get("allow_remote_imports")
        )
        self.remote_timeout = config.getint(
            CONFIG_SECTION, "remote_timeout", fallback=self.DEFAULTS.get("remote_timeout")
        )
        self.remote_max_attempts = config.getint(
            CONFIG_SECTION, "remote_max_attempts", fallback=self.DEFAULTS.get("remote_max_attempts")
        )
        self.region = config.get(CONFIG_SECTION, "region", fallback=self.DEFAULTS.get("region"))
        self.coerce = config.getboolean(CONFIG_SECTION, "coerce", fallback=self.DEFAULTS.get("coerce"))
        self.workers = config.getint(CONFIG_SECTION, "workers", fallback=self.DEFAULTS.get("workers"))
        self.lint_config = config.get(CONFIG_SECTION, "lint_config", fallback=self.DEFAULTS.get("lint_config"))

        # Configure boto3 to retry 1 times by default
        self._boto3_retry = config.getint(CONFIG_SECTION, "boto3_retry", fallback=self.DEFAULTS.get("max_retry"))
        self._boto3_config = {"retries": {"max_attempts": self._boto3_retry, "mode": "standard"}}
        proxy = config.get(CONFIG_SECTION, "proxy", fallback=self.DEFAULTS.get("proxy"))
        if proxy != "NONE":
            self._boto3_config["proxies"] = {"https": proxy}
        self.boto3_config = Config(**self._boto3_config)
        self.logging_config = config.get(
            CONFIG_SECTION, "logging_config", fallback=self.DEFAULTS.get("logging_config")
        )

    def import_resolver(self) -> ImportResolver:
        """Search roots are SCHEMAFORGE_PATH entries first, then the configured search_paths."""
        fetcher = None
        if self.allow_remote_imports:
            from schemaforge.remote import RemoteFetcher

            fetcher = RemoteFetcher(
                region=self.region,
                boto3_config=self.boto3_config,
                timeout=self.remote_timeout,
                max_attempts=self.remote_max_attempts,
            )
        roots = split_search_path(os.environ.get(SCHEMA_PATH_ENV)) + self.search_paths
        return ImportResolver(roots, allow_remote=self.allow_remote_imports, fetcher=fetcher, use_environment=False)


class _UsageError(Exception):
    """Arguments parse but do not fit together."""

    pass


class _ExitRequest(Exception):
    def __init__(self, status):
        super().__init__(status)
        self.status = status


class _ArgumentParser(argparse.ArgumentParser):
    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise _ExitRequest(status)


def build_parser():
    parser = _ArgumentParser(prog="schemaforge", description="Schema toolkit: compile, validate, lint and generate.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at debug level")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    compile_parser = subparsers.add_parser("compile", help="compile a schema and print its induced slots")
    compile_parser.add_argument("schema")
    compile_parser.add_argument("--format", choices=["text", "json"], default="text")

    validate_parser = subparsers.add_parser("validate", help="validate data files against a schema class")
    validate_parser.add_argument("-s", "--schema", required=True)
    validate_parser.add_argument("-C", "--target-class", required=True)
    validate_parser.add_argument("data", nargs="+")
    validate_parser.add_argument("--coerce", action="store_true", default=None, help="parse text cells by range")
    validate_parser.add_argument("--plugin", action="append", choices=sorted(PLUGINS), dest="plugins")
    validate_parser.add_argument("--format", choices=["text", "json"], default="text")

    lint_parser = subparsers.add_parser("lint", help="check a schema against best-practice rules")
    lint_parser.add_argument("schema")
    lint_parser.add_argument("--config", dest="lint_config")
    lint_parser.add_argument("--format", choices=["text", "json"], default="text")

    gen_parser = subparsers.add_parser("gen", help="generate an artifact from a schema")
    gen_parser.add_argument("--target", required=True, choices=[str(target) for target in GeneratorTarget])
    gen_parser.add_argument("schema")
    gen_parser.add_argument("-o", "--output")
    gen_parser.add_argument("--root-class")
    gen_parser.add_argument("--inline-depth", type=int, default=0)
    gen_parser.add_argument("--dialect", choices=["generic", "sqlite"], default="generic")

    sheets_parser = subparsers.add_parser("sheets", help="convert a tab-separated sheet into a schema")
    sheets_parser.add_argument("sheet")
    sheets_parser.add_argument("--id", required=True, dest="schema_id")
    sheets_parser.add_argument("--name", required=True, dest="schema_name")
    sheets_parser.add_argument("--import", action="append", dest="imports", default=[], help="extra schema import")
    sheets_parser.add_argument("-o", "--output")

    map_parser = subparsers.add_parser("map", help="derive a schema or transform data with a transform spec")
    map_parser.add_argument("--spec", required=True)
    map_parser.add_argument("--schema", required=True)
    map_parser.add_argument("-C", "--source-class")
    map_parser.add_argument("data", nargs="*")
    map_parser.add_argument("-o", "--output")
    return parser


def _emit(text, output=None):
    if output:
        write_text(output, text)
        log.info("Wrote %s", output)
    else:
        sys.stdout.write(text)


def _report_diagnostics(diagnostics):
    for message in diagnostics:
        sys.stderr.write(f"warning: {message}\n")


def _compile(args, config):
    schema = load_schema(args.schema, config.import_resolver())
    _report_diagnostics(schema.diagnostics)
    if args.format == "json":
        document = {
            "id": schema.source.id,
            "name": schema.name,
            "classes": {
                class_name: {
                    "ancestors": list(schema.ancestors[class_name][1:]),
                    "slots": [
                        {
                            "name": slot.name,
                            "range": slot.effective_range,
                            "cardinality": format_cardinality(slot.minimum_cardinality, slot.maximum_cardinality),
                            "identifier": slot.identifier,
                            "inheritance": str(slot.inheritance_label),
                            "slot_uri": slot.slot_uri_expanded,
                        }
                        for slot in schema.slots_of(class_name)
                    ],
                }
                for class_name in schema.source.classes
            },
        }
        _emit(json.dumps(document, indent=2) + "\n")
        return EXIT_OK
    lines = [f"Schema {schema.name} ({schema.source.id})"]
    for class_name in schema.source.classes:
        lines.append(f"Class {class_name}")
        for slot in schema.slots_of(class_name):
            cardinality = format_cardinality(slot.minimum_cardinality, slot.maximum_cardinality)
            marker = " identifier" if slot.identifier else ""
            lines.append(f"  {slot.name} {cardinality} {slot.effective_range} {slot.inheritance_label}{marker}")
    _emit("\n".join(lines) + "\n")
    return EXIT_OK


def _validate(args, config):
    schema = load_schema(args.schema, config.import_resolver())
    if args.target_class not in schema.induced:
        raise UnknownClassError(args.target_class)
    coerce = config.coerce if args.coerce is None else args.coerce
    plugins = [PLUGINS[name](coerce=coerce) for name in (args.plugins or ["conformance"])]
    validator = Validator(schema, plugins=plugins, coerce=coerce, workers=config.workers)
    reports = {path: validator.validate_collection(load_records(path, args.target_class)) for path in args.data}
    if args.format == "json":
        if len(reports) == 1:
            (report,) = reports.values()
            _emit(report.to_json())
        else:
            document = {path: report.to_dict() for path, report in reports.items()}
            _emit(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    else:
        for path, report in reports.items():
            if len(reports) > 1:
                _emit(f"{path}: {'valid' if report.valid else 'invalid'}\n")
            _emit(report.to_text())
    return EXIT_OK if all(report.valid for report in reports.values()) else EXIT_FINDINGS


def _lint(args, config):
    config_path = args.lint_config or config.lint_config
    lint_config = LintConfig.from_file(config_path) if config_path else LintConfig()
    findings = lint(parse_schema_file(args.schema), lint_config)
    _emit(findings_to_json(findings) if args.format == "json" else findings_to_text(findings))
    return EXIT_FINDINGS if has_errors(findings) else EXIT_OK


def _gen(args, config):
    target = GeneratorTarget(args.target)
    if target == GeneratorTarget.DOCS and not args.output:
        raise _UsageError("gen --target docs needs -o OUTPUT_DIRECTORY")
    schema = load_schema(args.schema, config.import_resolver())
    _report_diagnostics(schema.diagnostics)
    options = GeneratorOptions(
        target=target, root_class=args.root_class, dialect=args.dialect, inline_depth=args.inline_depth
    )
    result = generate(schema, options)
    if target == GeneratorTarget.DOCS:
        for page, text in result.items():
            write_text(os.path.join(args.output, page), text)
        log.info("Wrote %d pages to %s", len(result), args.output)
    else:
        _emit(result, args.output)
    return EXIT_OK


def _sheets(args, config):
    schema = load_sheet(args.sheet, args.schema_id, args.schema_name, args.imports)
    _report_diagnostics(schema.diagnostics)
    _emit(serialize_schema(schema), args.output)
    return EXIT_OK


def _map(args, config):
    spec = load_transform_spec(args.spec)
    _report_diagnostics(spec.diagnostics)
    if not args.data:
        derived = derive_schema(spec, parse_schema_file(args.schema))
        _report_diagnostics(derived.diagnostics)
        _emit(serialize_schema(derived), args.output)
        return EXIT_OK
    source_class = args.source_class or (spec.bindings[0].source_class if spec.bindings else None)
    if source_class is None:
        raise _UsageError("map needs -C SOURCE_CLASS when the spec has no transformations")
    derive_schema(spec, parse_schema_file(args.schema))
    records, failed = [], False
    for path in args.data:
        for index, result in enumerate(transform_collection(spec, load_records(path, source_class), config.workers)):
            if result.ok:
                records.append(result.record.values)
            else:
                # null keeps the output aligned with the input rows
                records.append(None)
                failed = True
                for error in result.errors:
                    sys.stderr.write(f"error: {path}/{index}: {error}\n")
    _emit(dump_yaml(records), args.output)
    return EXIT_FINDINGS if failed else EXIT_OK


COMMANDS = {
    "compile": _compile,
    "validate": _validate,
    "lint": _lint,
    "gen": _gen,
    "sheets": _sheets,
    "map": _map,
}


def run(argv, config: SchemaforgeConfig = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on findings, 2 on usage errors and 3 on input errors."""
    try:
        args = build_parser().parse_args(argv)
    except _ExitRequest as e:
        return EXIT_OK if e.status == 0 else EXIT_USAGE
    if args.verbose:
        logging.getLogger("schemaforge").setLevel(logging.DEBUG)
    try:
        config = config or SchemaforgeConfig(os.environ.get("CONFIG_FILE", DEFAULT_CONFIG_FILE))
        return COMMANDS[args.command](args, config)
    except (_UsageError, UnknownClassError) as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except (SchemaforgeError, OSError) as e:
        log.debug("Command %s failed", args.command, exc_info=True)
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


def main():
    logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT, stream=sys.stderr)
    config_file = os.environ.get("CONFIG_FILE", DEFAULT_CONFIG_FILE)
    try:
        config = SchemaforgeConfig(config_file)
    except Exception as e:
        sys.stderr.write(f"error: {e}\n")
        sys.exit(EXIT_INPUT)
    try:
        # Configure root logger
        fileConfig(config.logging_config, disable_existing_loggers=False)
    except Exception as e:
        log.warning(
            "Unable to configure logging from %s, using default settings.\nException: %s", config.logging_config, e
        )
    sys.exit(run(sys.argv[1:], config))


if __name__ == "__main__":
    main()
