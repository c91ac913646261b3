import io

import numpy as np
import pytest

from src.core.errors import NNetFormatError
from src.network.generators import acas_shaped_network, random_network
from src.network.nnet import dump_nnet, load_nnet, read_nnet, write_nnet
from tests.oracles import forward_pass_loops

SINGLE_LAYER = """// one affine layer
1,1,1,1,
1,1,
0,
-1.0,
1.0,
0.0,0.0,
1.0,1.0,
2.0,
0.5,
"""

NORMALIZED = """// normalized inputs
1,1,1,1,
1,1,
0,
0.0,
10.0,
5.0,0.0,
10.0,1.0,
2.0,
0.5,
"""


def test_single_affine_layer():
    net = load_nnet(SINGLE_LAYER)
    assert net.num_hidden_layers == 0
    assert net.evaluate([3.0])[0] == pytest.approx(6.5)
    assert net.evaluate([-3.0])[0] == pytest.approx(-5.5)


def test_accepts_text_stream():
    assert load_nnet(io.StringIO(SINGLE_LAYER)).evaluate([1.0])[0] == pytest.approx(2.5)


def test_missing_bias_row_is_truncated_file():
    text = SINGLE_LAYER.rsplit("0.5,", 1)[0]
    with pytest.raises(NNetFormatError, match="truncated file") as info:
        load_nnet(text)
    assert info.value.line is not None


def test_non_numeric_token_reports_line():
    text = SINGLE_LAYER.replace("2.0,", "two,")
    with pytest.raises(NNetFormatError, match="non-numeric") as info:
        load_nnet(text)
    assert info.value.line == 9


def test_extra_values_in_a_row_are_rejected():
    text = SINGLE_LAYER.replace("2.0,", "2.0,7.0,9.0,")
    with pytest.raises(NNetFormatError, match="expected 1 values, found 3") as info:
        load_nnet(text)
    assert info.value.line == 9


def test_trailing_comma_is_optional():
    text = SINGLE_LAYER.replace("2.0,", "2.0").replace("1,1,1,1,", "1,1,1,1")
    assert load_nnet(text).evaluate([1.0])[0] == pytest.approx(2.5)


def test_header_size_mismatch():
    text = SINGLE_LAYER.replace("1,1,\n0,", "1,2,\n0,", 1)
    with pytest.raises(NNetFormatError, match="dimension mismatch"):
        load_nnet(text)


def test_normalization_kept_separately_unless_requested():
    raw = load_nnet(NORMALIZED)
    assert raw.evaluate([1.0])[0] == pytest.approx(2.5)
    lower, upper = raw.default_box()
    assert lower[0] == pytest.approx(-0.5) and upper[0] == pytest.approx(0.5)

    folded = load_nnet(NORMALIZED, apply_normalization=True)
    # (7 - 5) / 10 = 0.2 -> 2 * 0.2 + 0.5 = 0.9, de-normalized with range 1, mean 0
    assert folded.evaluate([7.0])[0] == pytest.approx(0.9)
    lower, upper = folded.default_box()
    assert lower[0] == pytest.approx(0.0) and upper[0] == pytest.approx(10.0)


def test_generated_file_matches_loop_oracle(rng, tmp_path):
    net = random_network([2, 16, 2], rng)
    loaded = read_nnet(write_nnet(net, tmp_path / "net.nnet"))
    for x in rng.uniform(-1, 1, size=(10, 2)):
        assert np.allclose(loaded.evaluate(x), forward_pass_loops(net, x), atol=1e-9)


def test_round_trip_preserves_evaluate(rng):
    net = random_network([3, 7, 6, 4], rng)
    loaded = load_nnet(dump_nnet(net))
    for x in rng.normal(size=(50, 3)):
        assert np.allclose(loaded.evaluate(x), net.evaluate(x), rtol=0, atol=1e-12)


def test_acas_shaped_file_loads(rng, tmp_path):
    path = write_nnet(acas_shaped_network(rng), tmp_path / "acas.nnet")
    info = read_nnet(path).describe()
    assert info["hidden_layers"] == 6
    assert info["hidden_sizes"] == [50] * 6
