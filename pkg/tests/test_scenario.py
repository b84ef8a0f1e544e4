import pytest

from hybridra.scenario import (
    DEFAULTS,
    PRESETS,
    ConfigSyntaxError,
    ConfigValueError,
    build,
    dump_text,
    parse_override,
    parse_text,
    resolve,
    scenario_from,
    variable_urllc_channels,
)


def test_defaults_build():
    scn = build(dict(DEFAULTS))
    assert (scn.traffic.K_u, scn.traffic.K_m, scn.grid.F, scn.grid.S) == (25, 1000, 50, 10)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_builds(name):
    assert scenario_from(name).name == name


def test_ratio_sets_urllc_population():
    assert scenario_from("fig4a-fixed").traffic.K_u == 100
    assert scenario_from("fig5-perfect").traffic.K_u == 25
    assert scenario_from("fig5-perfect", **{"traffic.K_m": 30000}).traffic.K_u == 75


def test_parse_text_comments_and_blanks():
    flat = parse_text("# header\n\ntraffic.K_m = 200  # trailing\nrun.seed=3\n")
    assert flat == {"traffic.K_m": "200", "run.seed": "3"}


def test_parse_errors_carry_position():
    with pytest.raises(ConfigSyntaxError) as e:
        parse_text("traffic.K_m = 1\n  bogus.key = 2\n", "f.cfg")
    assert (e.value.line, e.value.column) == (2, 3)
    assert "f.cfg:2:3" in str(e.value)
    with pytest.raises(ConfigSyntaxError) as e:
        parse_text("traffic.K_m 4\n")
    assert e.value.line == 1


def test_override_parsing():
    assert parse_override("acb.mode=fixed:0.6") == ("acb.mode", "fixed:0.6")
    with pytest.raises(ConfigSyntaxError):
        parse_override("acb.mode")
    with pytest.raises(ConfigSyntaxError):
        parse_override("nope=1")


def test_dump_roundtrip():
    flat = resolve("fig4a-fixed")
    assert parse_text(dump_text(flat)) == flat


@pytest.mark.parametrize("key,value", [
    ("traffic.p", "2"),
    ("traffic.K_m", "ten"),
    ("acb.mode", "sometimes"),
    ("predictor", "crystal-ball"),
    ("predictor", "lstm"),
    ("reservation", "fixed:3"),
    ("run.window_start", "5000"),
    ("weights.w_u", "0.5"),
    ("grid.F", "0"),
])
def test_invalid_values_name_the_field(key, value):
    flat = dict(DEFAULTS, **{key: value})
    with pytest.raises(ConfigValueError) as e:
        build(flat)
    assert e.value.path.split(".")[0] in (key.split(".")[0], "predictor", "weights")


def test_coordinated_access_requires_oracle():
    with pytest.raises(ConfigValueError) as e:
        build(dict(DEFAULTS, access="coordinated"))
    assert e.value.path == "access"


def test_variable_table_interpolates():
    table = ((1000, 4), (30000, 34))
    assert variable_urllc_channels(table, 1000) == 4
    assert variable_urllc_channels(table, 30000) == 34
    assert variable_urllc_channels(table, 500) == 4
    assert variable_urllc_channels(table, 15500) == 19
    values = [variable_urllc_channels(table, k) for k in range(1000, 30001, 500)]
    assert values == sorted(values)
