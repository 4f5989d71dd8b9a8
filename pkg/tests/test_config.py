import pytest

from spadp.config import config_from_dict, load_config
from spadp.errors import ConfigError


def test_defaults():
    cfg = config_from_dict({})
    assert cfg.epsilons == [0.9, 0.5, 0.1]
    assert cfg.learner.seed == 7
    assert cfg.learner.excitation.count == 100
    assert cfg.simulation.mode == "superposition"
    sys, spec = cfg.build_system(0.5)
    assert sys.name == "mass" and spec.T == 2.0


def test_nested_override(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("learner:\n  dt: 0.05\n  excitation:\n    amplitude: 0.2\noracle:\n  k0_a: 2.0\n")
    cfg = load_config(path)
    assert cfg.learner.dt == 0.05
    assert cfg.learner.excitation.amplitude == 0.2
    assert cfg.learner.excitation.count == 100
    assert cfg.oracle.k0_a == 2.0


def test_boundary_override():
    cfg = config_from_dict({"boundary": {"x0": [0.1], "xT": [0.2]}})
    _, spec = cfg.build_system(0.1)
    assert spec.x0[0] == 0.1 and spec.xT[0] == 0.2


def test_custom_system_needs_boundary():
    cfg = config_from_dict({"system": {"tables": {"A": [[0.0]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]]}}})
    with pytest.raises(ConfigError):
        cfg.build_system(0.5)


def test_boundary_dimension_checked():
    cfg = config_from_dict({"boundary": {"x0": [0.1, 0.2], "xT": [0.2, 0.3]}})
    with pytest.raises(ConfigError):
        cfg.build_system(0.5)


@pytest.mark.parametrize(
    "data",
    [
        {"epsilons": []},
        {"epsilons": [1.5]},
        {"learner": {"data_source": "file"}},
        {"learner": {"dt": -0.1}},
        {"learner": {"excitation": {"freq_range": [3.0, 1.0]}}},
        {"simulation": {"gains": "guess"}},
        {"oracle": "fast"},
    ],
)
def test_invalid(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)
