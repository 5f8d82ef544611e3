import numpy as np
import pytest

import recurlab as rl
from recurlab.rates import parse_rate


def test_power_values():
    r = rl.Power(2.0)
    assert np.allclose(r.values(np.array([1, 2, 3])), [1.0, 4.0, 9.0])


def test_power_requires_positive_exponent():
    with pytest.raises(ValueError):
        rl.Power(0.0)
    with pytest.raises(ValueError):
        rl.Power(-1.0)


def test_powerlog_values_and_divergence():
    r = rl.PowerLog(1.0, 1.0)
    n = np.arange(1, 2000)
    v = r.values(n)
    assert v[0] == pytest.approx(np.log(2.0))
    assert np.all(np.diff(v[10:]) > 0)  # eventually increasing


def test_table_rate_bounds():
    r = rl.TableRate((1.0, 2.0, 5.0))
    assert r.value(3) == 5.0
    with pytest.raises(ValueError):
        r.values(np.array([4]))
    with pytest.raises(ValueError):
        rl.TableRate((1.0, -2.0))
    with pytest.raises(ValueError):
        rl.TableRate(())


def test_shrinking_strictly_decreasing_to_zero():
    t = rl.Shrinking(3.0)
    v = t.values(np.arange(1, 10_000))
    assert np.all(np.diff(v) < 0)
    assert v[-1] == pytest.approx(9999 ** (-1.0 / 3.0))


def test_parse_roundtrip():
    for text in ("pow:1", "powlog:2,0.5", "table:1,2,3", "shrink:3"):
        assert parse_rate(text).describe() == text


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_rate("pow:x")
    with pytest.raises(ValueError):
        parse_rate("nope:1")
