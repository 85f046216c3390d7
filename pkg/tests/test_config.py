import copy

import pytest
import yaml

from ctmcgsa import SEIARHD_NOMINAL, build_seiarhd, build_sir
from ctmcgsa.config import bundled_text, dump_config, load_config, parse_model_config
from ctmcgsa.errors import ConfigError
from ctmcgsa.simulate import RepresentationKind


@pytest.fixture(scope="module")
def seiarhd_doc():
    return yaml.safe_load(bundled_text("seiarhd"))


def test_bundled_seiarhd_equals_builder():
    cfg = load_config("seiarhd")
    assert cfg.model == build_seiarhd(2005)
    assert tuple(cfg.model.initial) == (2000, 5, 0, 0, 0, 0, 0)
    assert cfg.inputs.nominal_theta() == pytest.approx(SEIARHD_NOMINAL)


def test_bundled_sir_equals_builder():
    assert load_config("sir").model == build_sir()


def test_bundled_name_variants(tmp_path):
    a = load_config("sir.yaml")
    path = tmp_path / "copy.yaml"
    path.write_text(bundled_text("sir"))
    assert load_config(path).model == a.model
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


@pytest.mark.parametrize("name", ["sir", "seiarhd"])
def test_round_trip(name):
    cfg = load_config(name)
    text = dump_config(cfg)
    again = parse_model_config(text)
    assert again.model == cfg.model
    assert again.inputs == cfg.inputs
    assert again.studies == cfg.studies
    assert again.paper_scale == cfg.paper_scale
    assert dump_config(again) == text


def test_seiarhd_studies():
    cfg = load_config("seiarhd")
    scalar = cfg.study("scalar")
    assert (scalar.n, scalar.reps) == (1000, 20)
    assert scalar.representations == (RepresentationKind.FIRST_REACTION, RepresentationKind.MNRM)
    assert scalar.qoi.compartments == ("E", "A", "I")
    big = cfg.study("scalar", paper_scale=True)
    assert (big.n, big.reps) == (2000, 50)
    functional = cfg.study("functional")
    assert functional.qoi.t_end == 60 and functional.qoi.points == 1000
    with pytest.raises(ConfigError):
        cfg.study("nope")


def test_missing_range_names_parameter(seiarhd_doc):
    doc = copy.deepcopy(seiarhd_doc)
    del doc["model"]["parameters"][3]["range"]
    with pytest.raises(ConfigError, match="gamma_I") as info:
        parse_model_config(doc)
    assert "model.parameters[3]" in str(info.value)


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d["model"]["channels"][2].update(rate="gamma_Q * W_E"), "model.channels[2]"),
        (lambda d: d["model"]["channels"][0].update(rate="beta/N * * W_S"), "model.channels[0]"),
        (lambda d: d["model"]["channels"][1].update(target="X"), "model.channels[1]"),
        (lambda d: d["model"]["compartments"][0].update(initial=1999), "model"),
        (lambda d: d["model"]["parameters"][0].update(range=[4, 0.35]), "model.parameters[0]"),
        (lambda d: d["model"]["parameters"][0].update(nominal="two"), "model.parameters[0] (beta).nominal"),
        (lambda d: d["groups"][6].update(parameters=["p_IH"]), "groups"),
        (lambda d: d["studies"]["scalar"].update(reps=1), "studies.scalar"),
        (lambda d: d["studies"]["scalar"]["qoi"].update(kind="peak"), "studies.scalar.qoi.kind"),
        (lambda d: d["studies"]["functional"]["qoi"].update(compartment="Q"), "studies.functional"),
        (lambda d: d["studies"]["scalar"].update(representations=["tau-leap"]), "studies.scalar"),
        (lambda d: d["model"].pop("population"), "model"),
    ],
)
def test_errors_carry_locations(seiarhd_doc, mutate, where):
    doc = copy.deepcopy(seiarhd_doc)
    mutate(doc)
    with pytest.raises(ConfigError) as info:
        parse_model_config(doc)
    assert str(info.value).startswith(where)


def test_invalid_yaml_and_non_mapping():
    with pytest.raises(ConfigError):
        parse_model_config("model: [unclosed")
    with pytest.raises(ConfigError):
        parse_model_config("- just\n- a list\n")


def test_default_groups_one_per_parameter():
    cfg = load_config("sir")
    assert cfg.inputs.group_names == ("beta", "gamma_I", "Z")
