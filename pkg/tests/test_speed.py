import numpy as np
import pytest

from patsvd import ConfigurationError, SoundSpeedProfile, evaluate_speed, make_profile


def test_constant_profile():
    c = make_profile("const:2.5")
    assert c(0.0) == 2.5
    assert c(1.0) == 2.5
    assert c.c_min == c.c_max == 2.5


def test_rational_profile_formula():
    c = make_profile("c1")
    r = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(c(r), 1.0 / (1.0 + r**2), rtol=1e-15)
    assert c.c_min == 0.5 and c.c_max == 1.0


def test_rational_profile_scale():
    c = make_profile("c1:2")
    assert c(1.0) == pytest.approx(1.0 / 5.0)
    assert c.c_min == pytest.approx(0.2)


def test_piecewise_profile_annulus():
    c = make_profile("c2")
    assert c(0.0) == 1.0
    assert c(0.45) == 5.0
    assert c(0.9) == 1.0
    assert (c.c_min, c.c_max) == (1.0, 5.0)
    custom = make_profile("c2:0.1:0.2")
    assert custom(0.15) == 5.0 and custom(0.25) == 1.0


def test_tabulated_profile_interpolates():
    c = SoundSpeedProfile(kind="tabulated", abscissa=(0.0, 0.5, 1.0), values=(1.0, 2.0, 1.5))
    assert c(0.25) == pytest.approx(1.5)
    assert c(0.75) == pytest.approx(1.75)
    assert c.c_max == 2.0


def test_profile_array_and_scalar_returns():
    c = make_profile("c1")
    assert isinstance(c(0.3), float)
    out = c(np.array([0.1, 0.2]))
    assert out.shape == (2,)


def test_radius_outside_unit_interval_rejected():
    c = make_profile("c1")
    with pytest.raises(ValueError):
        c(1.2)
    with pytest.raises(ValueError):
        evaluate_speed(c, np.array([0.5, -0.1]))


@pytest.mark.parametrize("bad", [
    "const:0", "const:-1", "const", "c2:0.5", "c2:0.7:0.3", "mystery", "const:abc",
])
def test_bad_presets_rejected(bad):
    with pytest.raises(ConfigurationError):
        make_profile(bad)


def test_tabulated_validation():
    with pytest.raises(ConfigurationError):
        SoundSpeedProfile(kind="tabulated", abscissa=(0.0, 0.5), values=(1.0, -2.0))
    with pytest.raises(ConfigurationError):
        SoundSpeedProfile(kind="tabulated", abscissa=(0.1, 1.0), values=(1.0, 2.0))
    with pytest.raises(ConfigurationError):
        SoundSpeedProfile(kind="tabulated", abscissa=(0.0, 0.5, 0.4), values=(1.0, 2.0, 1.0))


def test_labels_are_informative():
    assert "rational" in make_profile("c1").label()
    assert "piecewise" in make_profile("c2").label()
    assert make_profile("const:3").label() == "const:3"
