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
import pytest
from assertpy import assert_that
from hypothesis import given, settings
from hypothesis import strategies as st
from schemaforge.induction import (
    CurieError,
    InductionError,
    InheritanceLabel,
    UnknownClassError,
    class_ancestors,
    compile_schema,
    contract_uri,
    expand_curie,
    expand_reference,
    induced_slots,
)
from schemaforge.loader import ImportResolver, PrefixMap, resolve_imports
from schemaforge.metamodel import BaseKind, ElementKind

from tests.common import parse_test_schema


def _compile(body):
    return compile_schema(resolve_imports(parse_test_schema(body), ImportResolver(use_environment=False)))


def _names(slots):
    return [slot.name for slot in slots]


PREFIX_MAP = PrefixMap(
    {
        "ex": "https://example.org/",
        "exs": "https://example.org/sample/",
        "schema": "http://schema.org/",
    }
)


@pytest.mark.parametrize(
    "curie, expected_uri",
    [
        ("ex:Thing", "https://example.org/Thing"),
        ("exs:S1", "https://example.org/sample/S1"),
        ("schema:", "http://schema.org/"),
    ],
)
def test_expand_curie(curie, expected_uri):
    assert_that(expand_curie(PREFIX_MAP, curie)).is_equal_to(expected_uri)


@pytest.mark.parametrize(
    "curie, expected_message",
    [
        ("Thing", "'Thing' is not a CURIE"),
        ("OBI:0000747", "'OBI:0000747' uses undeclared prefix 'OBI'"),
    ],
)
def test_expand_curie_errors(curie, expected_message):
    with pytest.raises(CurieError) as exc_info:
        expand_curie(PREFIX_MAP, curie)
    assert_that(str(exc_info.value)).is_equal_to(expected_message)


def test_expand_reference_keeps_absolute_uris():
    assert_that(expand_reference(PREFIX_MAP, "http://purl.org/dc/terms/title")).is_equal_to(
        "http://purl.org/dc/terms/title"
    )
    assert_that(expand_reference(PREFIX_MAP, "schema:name")).is_equal_to("http://schema.org/name")


@pytest.mark.parametrize(
    "uri, expected_text, expected_passthrough",
    [
        ("https://example.org/sample/S1", "exs:S1", False),
        ("https://example.org/Thing", "ex:Thing", False),
        ("https://other.org/Thing", "https://other.org/Thing", True),
    ],
)
def test_contract_uri_uses_longest_base(uri, expected_text, expected_passthrough):
    contracted = contract_uri(PREFIX_MAP, uri)

    assert_that(contracted.text).is_equal_to(expected_text)
    assert_that(contracted.passthrough).is_equal_to(expected_passthrough)


def test_class_ancestors_walk_is_a_before_mixins():
    schema = parse_test_schema(
        """
        classes:
          Base: {}
          Left:
            is_a: Base
          Right:
            is_a: Base
          Leaf:
            is_a: Left
            mixins: [Right]
        """
    )

    assert_that(class_ancestors(schema, "Leaf")).is_equal_to(["Leaf", "Left", "Base", "Right"])
    with pytest.raises(UnknownClassError):
        class_ancestors(schema, "Missing")


def test_ancestors_of_the_study_schema(study_schema):
    assert_that(study_schema.ancestors["AirSampleSite"]).is_equal_to(
        ("AirSampleSite", "SampleSite", "NamedThing", "Located")
    )
    assert_that(study_schema.descendants("NamedThing")).is_equal_to(["Study", "SampleSite", "AirSampleSite"])
    assert_that(study_schema.instantiable_classes()).is_equal_to(["Located", "Study", "SampleSite", "AirSampleSite"])


@pytest.mark.parametrize(
    "class_name, expected_slots",
    [
        ("Study", ["sites", "start_date", "sample_count", "id", "name"]),
        ("SampleSite", ["site_code", "environment_type", "id", "name", "latitude", "longitude"]),
        ("AirSampleSite", ["height", "site_code", "environment_type", "id", "name", "latitude", "longitude"]),
    ],
)
def test_induced_slot_order(study_schema, class_name, expected_slots):
    assert_that(_names(study_schema.slots_of(class_name))).is_equal_to(expected_slots)


def test_slot_usage_overlays_and_labels(study_schema):
    site = {slot.name: slot for slot in study_schema.slots_of("SampleSite")}
    air_site = {slot.name: slot for slot in study_schema.slots_of("AirSampleSite")}

    assert_that(site["latitude"].required).is_true()
    assert_that(site["latitude"].inheritance_label).is_equal_to(InheritanceLabel.OVERRIDDEN)
    assert_that(site["site_code"].inheritance_label).is_equal_to(InheritanceLabel.DIRECT)
    assert_that(site["id"].inheritance_label).is_equal_to(InheritanceLabel.INHERITED)
    assert_that(air_site["latitude"].required).is_true()
    assert_that(air_site["latitude"].inheritance_label).is_equal_to(InheritanceLabel.INHERITED)
    assert_that(air_site["latitude"].minimum_value).is_equal_to(-90)
    assert_that(air_site["environment_type"].description).is_equal_to("Environment below the sampler.")
    assert_that(air_site["environment_type"].inheritance_label).is_equal_to(InheritanceLabel.OVERRIDDEN)
    assert_that(air_site["height"].defined_in).is_equal_to("AirSampleSite")
    assert_that(air_site["height"].unit).is_equal_to("m")
    located = {slot.name: slot for slot in study_schema.slots_of("Located")}
    assert_that(located["latitude"].required).is_false()


def test_resolved_ranges(study_schema):
    study = {slot.name: slot for slot in study_schema.slots_of("Study")}
    site = {slot.name: slot for slot in study_schema.slots_of("SampleSite")}

    assert_that(study["sites"].range_kind).is_equal_to(ElementKind.CLASS)
    assert_that(study["sites"].multivalued).is_true()
    assert_that(study["sites"].maximum_cardinality).is_none()
    assert_that(study["sites"].minimum_cardinality).is_equal_to(1)
    assert_that(study["start_date"].base_kind).is_equal_to(BaseKind.DATE)
    assert_that(study["name"].effective_range).is_equal_to("string")
    assert_that(study["name"].slot_uri_expanded).is_equal_to("http://schema.org/name")
    assert_that(site["site_code"].base_kind).is_equal_to(BaseKind.STRING)
    assert_that(site["site_code"].patterns).is_equal_to(("^[A-Z]{2}[0-9]{3}$",))
    assert_that(site["environment_type"].range_kind).is_equal_to(ElementKind.ENUM)
    assert_that(site["environment_type"].permissible_values).contains("ENVO:00001998", "ENVO:00000020")
    assert_that(study_schema.identifier_slot("SampleSite").name).is_equal_to("id")


STUDY_BASE = "https://w3id.org/environmental-sample-schema/sampling-study/"


def test_expanded_uris(study_schema):
    uris = study_schema.expanded_uris

    assert_that(uris["Study"]).is_equal_to("http://schema.org/ResearchProject")
    assert_that(uris["SampleSite"]).is_equal_to(STUDY_BASE + "SampleSite")
    assert_that(uris["id"]).is_equal_to("http://schema.org/identifier")
    assert_that(uris["height"]).is_equal_to(STUDY_BASE + "height")
    assert_that(uris["date"]).is_equal_to("http://www.w3.org/2001/XMLSchema#date")
    assert_that(uris["uri"]).is_equal_to("http://www.w3.org/2001/XMLSchema#anyURI")
    assert_that(uris["SiteCode"]).is_equal_to(STUDY_BASE + "SiteCode")
    assert_that(uris["UnitsEnum"]).is_equal_to(STUDY_BASE + "UnitsEnum")


def test_unknown_class(study_schema):
    with pytest.raises(UnknownClassError, match="unknown class 'Site'"):
        study_schema.slots_of("Site")


def test_identifier_is_forced_required_and_single(caplog):
    schema = _compile(
        """
        classes:
          Thing:
            attributes:
              id:
                identifier: true
                required: false
                multivalued: true
        """
    )

    (identifier,) = schema.slots_of("Thing")
    assert_that(identifier.required).is_true()
    assert_that(identifier.multivalued).is_false()
    assert_that(schema.diagnostics).contains(
        "class 'Thing': identifier slot 'id' declared required: false, forced true",
        "class 'Thing': identifier slot 'id' declared multivalued, forced single",
    )


def test_slot_is_a_chain_is_folded():
    schema = _compile(
        """
        classes:
          Measurement:
            slots: [depth]
        slots:
          length:
            range: float
            minimum_value: 0
            description: A length.
          depth:
            is_a: length
            description: A depth.
        """
    )

    (depth,) = schema.slots_of("Measurement")
    assert_that(depth.effective_range).is_equal_to("float")
    assert_that(depth.minimum_value).is_equal_to(0)
    assert_that(depth.description).is_equal_to("A depth.")


def test_attribute_shadows_global_slot():
    schema = _compile(
        """
        classes:
          Parent:
            attributes:
              depth:
                range: integer
          Child:
            is_a: Parent
            slots: [depth]
        slots:
          depth:
            range: float
        """
    )

    assert_that(schema.slots_of("Child")[0].effective_range).is_equal_to("float")
    assert_that(schema.slots_of("Parent")[0].effective_range).is_equal_to("integer")


@pytest.mark.parametrize(
    "body, expected_message",
    [
        (
            """
            classes:
              Thing:
                attributes:
                  id:
                    identifier: true
                  code:
                    identifier: true
            """,
            "class 'Thing' has more than one identifier slot: id, code",
        ),
        (
            """
            classes:
              Thing:
                slot_usage:
                  depth:
                    required: true
            """,
            "class 'Thing' has slot_usage for unreachable slot 'depth'",
        ),
        (
            """
            classes:
              Left:
                slots: [depth]
                slot_usage:
                  depth:
                    minimum_value: 0
              Right:
                slots: [depth]
                slot_usage:
                  depth:
                    minimum_value: 1
              Leaf:
                is_a: Left
                mixins: [Right]
            slots:
              depth:
                range: float
            """,
            "class 'Leaf': slot_usage for 'depth' in 'Left' and 'Right' conflict on minimum_value",
        ),
        (
            """
            classes:
              Thing:
                class_uri: OBI:0000747
            """,
            "'OBI:0000747' uses undeclared prefix 'OBI'",
        ),
    ],
)
def test_compile_errors(body, expected_message):
    with pytest.raises(InductionError) as exc_info:
        _compile(body)
    assert_that(str(exc_info.value)).is_equal_to(expected_message)


def test_induced_slots_on_an_unmerged_schema():
    schema = parse_test_schema(
        """
        classes:
          Thing:
            attributes:
              count:
                range: integer
        """
    )

    (count,) = induced_slots(schema, "Thing")
    assert_that(count.base_kind).is_equal_to(BaseKind.INTEGER)
    assert_that(count.range_kind).is_equal_to(ElementKind.TYPE)


PREFIX_NAMES = st.from_regex(r"[a-z][a-z0-9]{0,6}", fullmatch=True)


@settings(max_examples=200)
@given(data=st.data(), prefixes=st.lists(PREFIX_NAMES, min_size=1, max_size=6, unique=True))
def test_contract_inverts_expand(data, prefixes):
    prefix_map = PrefixMap({prefix: f"https://example.org/{prefix}/" for prefix in prefixes})
    curie = "{0}:{1}".format(
        data.draw(st.sampled_from(prefixes)), data.draw(st.from_regex(r"[A-Za-z0-9_]{0,12}", fullmatch=True))
    )

    contracted = contract_uri(prefix_map, expand_curie(prefix_map, curie))

    assert_that(contracted.passthrough).is_false()
    assert_that(contracted.text).is_equal_to(curie)


def _hierarchy_body(depth, with_mixin):
    lines = ["classes:", "  Tagged:", "    mixin: true", "    attributes:", "      tag: {}"]
    for level in range(depth):
        lines.append(f"  C{level}:")
        if level:
            lines.append(f"    is_a: C{level - 1}")
        if with_mixin[level]:
            lines.append("    mixins: [Tagged]")
        lines.extend(["    attributes:", f"      a{level}: {{}}"])
    return "\n".join(lines) + "\n"


@settings(max_examples=50, deadline=None)
@given(data=st.data(), depth=st.integers(min_value=1, max_value=5))
def test_children_inherit_every_ancestor_slot(data, depth):
    with_mixin = data.draw(st.lists(st.booleans(), min_size=depth, max_size=depth))
    schema = _compile(_hierarchy_body(depth, with_mixin))

    for level in range(1, depth):
        child, parent = f"C{level}", f"C{level - 1}"
        assert_that(_names(schema.slots_of(child))).contains(*_names(schema.slots_of(parent)))
        assert_that(class_ancestors(schema.source, child)).contains(*class_ancestors(schema.source, parent))
    for level in range(depth):
        slot_names = _names(schema.slots_of(f"C{level}"))
        assert_that(slot_names).contains(*[f"a{ancestor}" for ancestor in range(level + 1)])
        assert_that(slot_names).does_not_contain_duplicates()
