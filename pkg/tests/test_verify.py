import pytest

from dyadic_morrey.errors import ParameterError, ParseError
from dyadic_morrey.files import parse_report
from dyadic_morrey.verify import COLUMNS, SUITES, VerificationSuite, VerifyConfig, create_suite


@pytest.fixture
def config():
    return VerifyConfig(
        J=4, stability_levels=(2, 3), ensemble_size=6, bmo_ensemble_size=3, pair_count=3,
        predual_J=3, predual_ensemble_size=3, predual_partners=3, band_ratio=(0.01, 100.0),
    )


class AlwaysFailing(VerificationSuite):

    @property
    def name(self) -> str:
        return 'failing'

    def run(self):
        self.measure('recorded', value=1.0)
        self.gate('impossible', False, value=0.0)


def test_defaults():
    c = VerifyConfig()
    assert (c.n, c.j_min, c.J) == (1, 0, 8)
    assert c.stability_levels == (4, 8)
    assert (c.p, c.q) == (1.6, 1.2)
    assert c.seed == 42
    assert c.ensemble_size == 500
    assert c.alphas == [0.25, 0.5]


def test_resolve_layers_yaml_then_overrides(tmp_path):
    path = tmp_path / "verify.yaml"
    path.write_text("J: 6\nseed: 7\nalphas: [0.5]\n")
    c = VerifyConfig.resolve(str(path), seed=9, theta=None)
    assert c.J == 6
    assert c.seed == 9
    assert c.alphas == [0.5]
    assert c.theta == 0.0


def test_resolve_rejects_unknown_fields(tmp_path):
    path = tmp_path / "verify.yaml"
    path.write_text("ensemble: 5\n")
    with pytest.raises(ParameterError) as error:
        VerifyConfig.resolve(str(path))
    assert "ensemble" in str(error.value)


def test_resolve_rejects_malformed_yaml(tmp_path):
    path = tmp_path / "verify.yaml"
    path.write_text("J: [6\n")
    with pytest.raises(ParseError):
        VerifyConfig.resolve(str(path))


def test_resolve_rejects_inconsistent_levels():
    with pytest.raises(ParameterError):
        VerifyConfig.resolve(stability_levels=(5, 3))
    with pytest.raises(ParameterError):
        VerifyConfig.resolve(band_ratio=(2.0, 3.0))
    with pytest.raises(ParameterError):
        VerifyConfig.resolve(ensemble_size=0)


def test_unknown_suite(config):
    with pytest.raises(ParameterError):
        create_suite('thm9', config)


def test_failing_gate_is_recorded(config):
    suite = AlwaysFailing(config, "test")
    table = suite.execute()
    assert not suite.passed
    assert suite.failing == ['impossible']
    assert table.column('passed') == [None, False]
    assert table.columns == COLUMNS


@pytest.mark.parametrize('name', sorted(SUITES))
def test_suite_passes_on_a_small_grid(config, name):
    suite = create_suite(name, config, f"verify {name}")
    table = suite.execute()
    assert suite.name == name
    assert suite.failing == []
    assert any(passed is True for passed in table.column('passed'))


def test_report_records_provenance(config):
    suite = create_suite('decomp', config, "dyadic-morrey verify decomp")
    metadata, header, rows = parse_report(suite.execute().dumps())
    assert metadata['command'] == "dyadic-morrey verify decomp"
    assert metadata['seed'] == "42"
    assert metadata['geometry'] == "n=1 j_min=0 J=4"
    assert header == COLUMNS
    assert {row[0] for row in rows} == {'commutator_decomposition', 'eigen_relation', 'haar_round_trip'}


def test_suites_are_deterministic(config):
    first = create_suite('thm1', config).execute().dumps()
    second = create_suite('thm1', config).execute().dumps()
    assert first == second


@pytest.mark.parametrize('name', ['thm3', 'thm4', 'thm5'])
def test_operator_bands_hold_the_default_window(name):
    config = VerifyConfig(J=5, stability_levels=(3, 5), ensemble_size=8, bmo_ensemble_size=4, pair_count=4)
    assert config.band_ratio == VerifyConfig().band_ratio
    suite = create_suite(name, config)
    table = suite.execute()
    assert suite.failing == []
    stability = [value for check, value in zip(table.column('check'), table.column('value'))
                 if check.endswith('_upper_stability')]
    assert stability
    assert all(ratio >= 1.0 - 1e-9 for ratio in stability)
