import math

import numpy as np
import pytest

from rossbytrap.errors import ConfigError
from rossbytrap.profiles import builtin_profile, eval_profile, profile_from_config


def test_sin_profile_values():
    p = builtin_profile("sin")
    assert eval_profile(p, math.pi / 2) == pytest.approx((1.0, 0.0, -1.0), abs=1e-15)
    assert eval_profile(p, 0.0) == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)


def test_shifted_sin_profile_values():
    p = builtin_profile("2+sin")
    assert eval_profile(p, math.pi) == pytest.approx((2.0, -1.0, 0.0), abs=1e-12)


def test_periodicity():
    p = builtin_profile("1+0.5cos")
    for x in (0.3, 2.0, 5.9):
        a = np.array(eval_profile(p, x))
        b = np.array(eval_profile(p, x + 2 * math.pi))
        assert np.allclose(a, b, atol=1e-12)


def test_array_and_scalar_paths_agree():
    p = profile_from_config({"type": "fourier", "constant": 1.3,
                             "cos": [0.2, 0.0, 0.1], "sin": [0.5, -0.3]})
    xs = np.linspace(0, 2 * math.pi, 17)
    b_arr, bp_arr, bpp_arr = p.eval(xs)
    for i, x in enumerate(xs):
        b, bp, bpp = p.eval_scalar(float(x))
        assert b == pytest.approx(b_arr[i], abs=1e-14)
        assert bp == pytest.approx(bp_arr[i], abs=1e-14)
        assert bpp == pytest.approx(bpp_arr[i], abs=1e-14)


def test_derivative_consistency_by_refinement():
    # centered differences of b converge to b' at second order
    p = profile_from_config({"type": "fourier", "constant": 0.7,
                             "cos": [0.3], "sin": [1.0, 0.2]})
    x = 1.234
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        fd = (p.b(x + h) - p.b(x - h)) / (2 * h)
        errs.append(abs(fd - p.eval(x)[1]))
    rate = math.log(errs[0] / errs[2]) / math.log(4.0)
    assert rate == pytest.approx(2.0, abs=0.1)


def test_zero_sets():
    psin = builtin_profile("sin")
    assert np.allclose(psin.zeros_of_b, [0.0, math.pi], atol=1e-9)
    assert np.allclose(psin.zeros_of_bprime, [math.pi / 2, 3 * math.pi / 2], atol=1e-9)

    pshift = builtin_profile("2+sin")
    assert pshift.zeros_of_b == ()
    assert np.allclose(pshift.zeros_of_bprime, [math.pi / 2, 3 * math.pi / 2], atol=1e-9)

    pcos = builtin_profile("1+0.5cos")
    assert pcos.zeros_of_b == ()
    assert np.allclose(pcos.zeros_of_bprime, [0.0, math.pi], atol=1e-9)


def test_config_rejects_bad_specs():
    with pytest.raises(ConfigError):
        profile_from_config({"type": "builtin", "name": "nope"})
    with pytest.raises(ConfigError):
        profile_from_config({"type": "fourier", "cos": ["x"]})
    with pytest.raises(ConfigError):
        profile_from_config({"type": "fourier", "bogus": 1})
    with pytest.raises(ConfigError):
        profile_from_config("sin")
