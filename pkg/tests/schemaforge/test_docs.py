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
from schemaforge.docs import gen_docs, link, mermaid_id, page_name
from schemaforge.induction import compile_schema
from schemaforge.loader import resolve_imports

from tests.common import parse_test_schema


@pytest.fixture()
def sample_pages(sample_schema):
    return gen_docs(sample_schema)


@pytest.fixture()
def study_pages(study_schema):
    return gen_docs(study_schema)


def _lines(page):
    return page.split("\n")


@pytest.mark.parametrize(
    "element_name, expected_page, expected_link",
    [
        ("Sample", "Sample.md", "[Sample](Sample.md)"),
        ("sample site", "sample_site.md", "[sample site](sample_site.md)"),
    ],
)
def test_page_names(element_name, expected_page, expected_link):
    assert_that(page_name(element_name)).is_equal_to(expected_page)
    assert_that(link(element_name)).is_equal_to(expected_link)


def test_one_page_per_element(sample_pages):
    assert_that(sorted(sample_pages)).is_equal_to(
        sorted(
            [
                "index.md",
                "Sample.md",
                "id.md",
                "environment_type.md",
                "latitude.md",
                "longitude.md",
                "depth.md",
                "depth_units.md",
                "k.md",
                "EnvironmentTypeEnum.md",
                "UnitsEnum.md",
                "string.md",
                "integer.md",
                "float.md",
                "boolean.md",
                "uri.md",
                "curie.md",
                "date.md",
                "datetime.md",
            ]
        )
    )
    for text in sample_pages.values():
        assert_that(text).ends_with("\n")
        assert_that(text).does_not_contain("\r")


def test_class_page(sample_pages):
    lines = _lines(sample_pages["Sample.md"])

    assert_that(lines[0]).is_equal_to("# Class: Sample")
    assert_that(lines).contains(
        "Description: A material sample collected from the environment.",
        "URI: [OBI:0000747](http://purl.obolibrary.org/obo/OBI_0000747)",
        "| Name | Cardinality and Range | Inheritance | Examples |",
        "| [id](id.md) | 1..1 [curie](curie.md) | direct |  |",
        "| [environment_type](environment_type.md) | 0..1 [EnvironmentTypeEnum](EnvironmentTypeEnum.md) | direct |  |",
        "| [latitude](latitude.md) | 1..1 [float](float.md) | direct |  |",
        "| self | OBI:0000747 |",
        "| native | environmental_sample_schema:Sample |",
        "* **Sample**",
    )


def test_class_page_hierarchy(study_pages):
    air_site = _lines(study_pages["AirSampleSite.md"])
    site = _lines(study_pages["SampleSite.md"])
    study = _lines(study_pages["Study.md"])

    assert_that(air_site).contains(
        "* [NamedThing](NamedThing.md)",
        "    * [SampleSite](SampleSite.md)",
        "        * **AirSampleSite**",
        "    SampleSite <|-- AirSampleSite",
        "| [height](height.md) | 0..1 [float](float.md) | direct |  |",
        "| [environment_type](environment_type.md) | 0..1 [EnvironmentTypeEnum](EnvironmentTypeEnum.md) "
        "| overridden |  |",
    )
    assert_that(site).contains(
        "        * [AirSampleSite](AirSampleSite.md)",
        "Mixins: [Located](Located.md)",
        "    Located <|.. SampleSite",
        "| [latitude](latitude.md) | 1..1 [float](float.md) | overridden |  |",
    )
    assert_that(study).contains(
        '    Study --> "1..*" SampleSite : sites',
        "| [name](name.md) | 1..1 [string](string.md) | inherited | Lake survey 2021 |",
        "| exact | schema:Project |",
        "| self | schema:ResearchProject |",
    )
    assert_that(study_pages["NamedThing.md"]).contains("_Abstract class._")


def test_slot_page(sample_pages):
    lines = _lines(sample_pages["latitude.md"])

    assert_that(lines[0]).is_equal_to("# Slot: latitude")
    assert_that(lines).contains(
        "Range: [float](float.md)",
        "| [Sample](Sample.md) | A material sample collected from the environment. | no |",
    )
    assert_that(sample_pages["latitude.md"]).contains(
        "```yaml\n"
        "name: latitude\n"
        "description: The latitude of the sample location.\n"
        "from_schema: https://w3id.org/environmental-sample-schema\n"
        "slot_uri: schema:latitude\n"
        "domain_of:\n"
        "- Sample\n"
        "range: float\n"
        "required: true\n"
        "minimum_value: -90\n"
        "maximum_value: 90\n"
        "```\n"
    )


def test_slot_page_marks_modifying_classes(study_pages):
    assert_that(_lines(study_pages["latitude.md"])).contains(
        "| [Located](Located.md) | Mixin for things placed on the globe. | no |",
        "| [SampleSite](SampleSite.md) | A place where samples are taken. | yes |",
        "| [AirSampleSite](AirSampleSite.md) | A site where air is sampled above the ground. | no |",
    )


def test_enum_page(sample_pages):
    lines = _lines(sample_pages["EnvironmentTypeEnum.md"])

    assert_that(lines).contains(
        "# Enum: EnvironmentTypeEnum",
        "| Value | Meaning | Description |",
        "| ENVO:00001998 | ENVO:00001998 | soil |",
        "| ENVO:00000020 | ENVO:00000020 | lake |",
        "| [environment_type](environment_type.md) | The type of sample |",
    )


def test_type_pages(sample_pages, study_pages):
    assert_that(_lines(sample_pages["float.md"])).contains(
        "# Type: float", "Base: float", "URI: [xsd:float](http://www.w3.org/2001/XMLSchema#float)"
    )
    assert_that(_lines(study_pages["SiteCode.md"])).contains(
        "Base: string",
        "URI: [sampling_study:SiteCode](https://w3id.org/environmental-sample-schema/sampling-study/SiteCode)",
        "Pattern: `^[A-Z]{2}[0-9]{3}$`",
    )


def test_index_page(sample_pages):
    lines = _lines(sample_pages["index.md"])

    assert_that(lines[0]).is_equal_to("# Environmental sample schema")
    assert_that(lines).contains(
        "URI: https://w3id.org/environmental-sample-schema",
        "Name: environmental_sample_schema",
        "Version: 1.0.0",
        "## Classes",
        "| [Sample](Sample.md) | A material sample collected from the environment. |",
        "## Enumerations",
        "| [UnitsEnum](UnitsEnum.md) | Units of length used for sampling depth. |",
        "## Types",
    )


@pytest.mark.parametrize(
    "element_name, expected_id",
    [("Sample", "Sample"), ("sample site", "sample_site"), ("site-2.b", "site_2_b")],
)
def test_mermaid_id(element_name, expected_id):
    assert_that(mermaid_id(element_name)).is_equal_to(expected_id)


def test_diagram_uses_word_ids_for_spaced_names(resolver):
    schema = compile_schema(
        resolve_imports(
            parse_test_schema(
                """
                classes:
                  named thing:
                    attributes:
                      id:
                        identifier: true
                  geo located:
                    description: Anything with coordinates.
                  sample site:
                    is_a: named thing
                    mixins:
                      - geo located
                    attributes:
                      part_of:
                        range: named thing
                  air sample site:
                    is_a: sample site
                """
            ),
            resolver,
        )
    )
    page = gen_docs(schema)["sample_site.md"]
    diagram = page[page.index("```mermaid") : page.index("```", page.index("```mermaid") + 1)]

    assert_that(_lines(diagram)).contains(
        "    class sample_site",
        "    named_thing <|-- sample_site",
        "    geo_located <|.. sample_site",
        "    sample_site <|-- air_sample_site",
        '    sample_site --> "0..1" named_thing : part_of',
    )
    assert_that(diagram).does_not_contain("named thing", "geo located", "air sample site")
