import numpy as np
import pytest

from optics.errors import InputError, ParseError
from optics.fock import FockState
from optics.interferometer import variational_param_count
from qml.feature_map import FeatureMapSpec, default_feature_map


class TestFeatureMapSpec:
    def test_default_outcome(self):
        assert default_feature_map(2, 4, 2, 2).outcome() == FockState.of(1, 0)
        assert default_feature_map(2, 4, 2, 0).outcome() == FockState(())

    def test_validation(self):
        with pytest.raises(InputError):
            default_feature_map(2, 3, 2, 3)
        with pytest.raises(InputError):
            default_feature_map(2, 3, 4, 1)
        with pytest.raises(InputError):
            default_feature_map(variational_param_count(2) + 1, 2, 1, 0)
        with pytest.raises(InputError):
            FeatureMapSpec(1, 3, 1, 1, designated_outcome=(2,))

    def test_angles_wrap_and_tile(self):
        fm = default_feature_map(2, 3, 2, 1)
        angles = fm.angles([0.25, 1.5], 3)
        assert angles.shape == (variational_param_count(3),)
        assert angles[0] == pytest.approx(np.pi / 2)
        assert angles[1] == pytest.approx(np.pi)
        assert angles[2] == pytest.approx(np.pi / 2)

    def test_dimension_checked(self):
        with pytest.raises(InputError):
            default_feature_map(2, 3, 2, 1).encode([0.1])

    def test_zero_point_encodes_identity(self):
        a = default_feature_map(2, 3, 2, 1).encode([0.0, 0.0])
        for p in [(0,), (1,), (2,)]:
            assert np.allclose(a.compose(p).matrix, np.eye(3))

    def test_stages_depend_on_prefix(self):
        a = default_feature_map(1, 3, 2, 1).encode([0.1])
        assert not np.allclose(a.stage((0,)).matrix, a.stage((1,)).matrix)

    def test_static_stages(self):
        fm = default_feature_map(1, 3, 2, 1, adaptive_stages=False)
        a = fm.encode([0.1])
        assert np.allclose(a.stage((1,)).matrix, np.eye(2))

    def test_json_round_trip(self):
        fm = default_feature_map(2, 4, 3, 2, scale=1.0)
        assert FeatureMapSpec.from_json(fm.to_json()) == fm

    def test_from_json_missing_key(self):
        with pytest.raises(ParseError) as exc:
            FeatureMapSpec.from_json({"d": 1, "m": 3, "n": 2})
        assert exc.value.field == "k"
