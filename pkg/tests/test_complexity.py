import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlab import complexity as cx
from eqlab.errors import ConfigError


def brute_force_conv_windows(n_s, k, padding, dilation, stride):
    """Count valid window start positions by explicit enumeration."""
    padded = n_s + 2 * padding
    count = 0
    start = 0
    while True:
        last_tap = start + dilation * (k - 1)
        if last_tap > padded - 1:
            break
        count += 1
        start += stride
    return count


class TestConvOutputLength:
    def test_same_padding_identity(self):
        assert cx.conv_output_length(100, 11, padding=5) == 100

    def test_valid_convolution(self):
        assert cx.conv_output_length(10, 3) == 8

    def test_strided_dilated(self):
        # frozen from the brute-force window enumeration below
        assert brute_force_conv_windows(34, 5, 2, 2, 3) == 10
        assert cx.conv_output_length(34, 5, padding=2, dilation=2, stride=3) == 10

    def test_exhaustive_grid_against_enumeration(self):
        for n_s in range(1, 65):
            for k in range(1, 10):
                for stride in range(1, 5):
                    for padding in range(0, 5):
                        for dilation in range(1, 4):
                            if dilation * (k - 1) + 1 > n_s + 2 * padding:
                                with pytest.raises(ConfigError):
                                    cx.conv_output_length(n_s, k, padding,
                                                          dilation, stride)
                                continue
                            got = cx.conv_output_length(n_s, k, padding,
                                                        dilation, stride)
                            want = brute_force_conv_windows(n_s, k, padding,
                                                            dilation, stride)
                            assert got == want, (n_s, k, padding, dilation, stride)

    def test_precondition_names_layer(self):
        with pytest.raises(ConfigError, match="widener"):
            cx.conv_output_length(3, 9, layer_name="widener")


class TestLayerFormulas:
    def test_dense(self):
        # instrumented two-matrix chain oracle values, frozen
        assert cx.rmps_dense(40, 100, 2) == 4200
        assert cx.rmps_dense(1, 1, 1) == 2
        assert cx.rmps_dense(4, 4, 2) == 24

    def test_conv1d(self):
        assert cx.rmps_conv1d(3, 4, 8, 10) == 960
        assert cx.rmps_conv1d(1, 1, 1, 1) == 1
        assert cx.rmps_conv1d(11, 4, 20, 41) == 36080

    def test_lstm(self):
        assert cx.rmps_lstm(10, 4, 100, 2) == 421000
        assert cx.rmps_lstm(1, 1, 1, 1) == 12
        assert cx.rmps_lstm(20, 4, 16, 2) == 27200

    def test_bilstm_is_twice_lstm(self):
        assert cx.rmps_bilstm(10, 4, 100, 2) == 842000
        assert cx.rmps_bilstm(1, 1, 1, 1) == 24
        assert cx.rmps_bilstm(20, 4, 16, 2) == 54400

    @given(st.integers(1, 50), st.integers(1, 50), st.integers(1, 50),
           st.integers(1, 50))
    def test_lstm_strictly_monotone(self, n_s, n_i, n_h, n_o):
        base = cx.rmps_lstm(n_s, n_i, n_h, n_o)
        assert cx.rmps_lstm(n_s + 1, n_i, n_h, n_o) > base
        assert cx.rmps_lstm(n_s, n_i + 1, n_h, n_o) > base
        assert cx.rmps_lstm(n_s, n_i, n_h + 1, n_o) > base
        assert cx.rmps_lstm(n_s, n_i, n_h, n_o + 1) > base

    @given(st.integers(1, 100), st.integers(1, 100), st.integers(1, 100))
    def test_dense_strictly_monotone(self, n_i, n1, n_o):
        base = cx.rmps_dense(n_i, n1, n_o)
        assert cx.rmps_dense(n_i + 1, n1, n_o) > base
        assert cx.rmps_dense(n_i, n1 + 1, n_o) > base
        assert cx.rmps_dense(n_i, n1, n_o + 1) > base

    @given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 30),
           st.integers(1, 30))
    def test_conv_strictly_monotone(self, k, n_i, n_o, n_s):
        base = cx.rmps_conv1d(k, n_i, n_o, n_s)
        assert cx.rmps_conv1d(k + 1, n_i, n_o, n_s) > base
        assert cx.rmps_conv1d(k, n_i + 1, n_o, n_s) > base
        assert cx.rmps_conv1d(k, n_i, n_o + 1, n_s) > base
        assert cx.rmps_conv1d(k, n_i, n_o, n_s + 1) > base

    @pytest.mark.parametrize("n_h", [64, 128, 256, 512])
    def test_hidden_doubling_scale_law(self, n_h):
        # d^2 term dominates: doubling n_h about quadruples the count
        r = cx.rmps_lstm(10, 4, 2 * n_h, 2) / cx.rmps_lstm(10, 4, n_h, 2)
        assert 3.5 <= r <= 4.0


MLP3 = cx.ModelSpec(
    [cx.dense(100), cx.dense(100), cx.dense(100), cx.dense(2, activation="linear")],
    memory=10, features=4, n_out=2)
CNN_MLP = cx.ModelSpec(
    [cx.conv1d(8, 3, padding=1), cx.flatten(), cx.dense(50), cx.dense(50),
     cx.dense(2, activation="linear")],
    memory=20, features=4, n_out=2)


class TestModelComposition:
    def test_mlp3_total(self):
        assert cx.rmps_model(MLP3).total_rmps == 24200

    def test_single_dense_readout(self):
        m = cx.ModelSpec([cx.dense(2)], memory=1, features=4, n_out=2)
        assert cx.rmps_model(m).total_rmps == 8

    def test_cnn_mlp_total(self):
        assert cx.rmps_model(CNN_MLP).total_rmps == 12520

    def test_flatten_only_is_free(self):
        m = cx.ModelSpec([cx.flatten()], memory=10, features=4, n_out=40)
        assert cx.rmps_model(m).total_rmps == 0

    def test_attribution_sums(self):
        for m in (MLP3, CNN_MLP):
            rep = cx.rmps_model(m)
            assert sum(r.rmps for r in rep.layers) == rep.total_rmps
            assert sum(r.params for r in rep.layers) == rep.total_params

    def test_recurrent_stack_equals_standalone_formula(self):
        # bilstm + flatten + readout recovers the standalone count exactly:
        # the readout charges the flattened-sequence projection the
        # standalone formula folds into its +n_o term.
        for n_s, n_h in [(11, 7), (21, 16), (41, 100)]:
            m = cx.ModelSpec([cx.bilstm(n_h), cx.flatten(),
                              cx.dense(2, activation="linear")],
                             memory=n_s, features=4, n_out=2)
            assert cx.rmps_model(m).total_rmps == cx.rmps_bilstm(n_s, 4, n_h, 2)

    def test_shape_chain_mismatch_names_both(self):
        m = cx.ModelSpec([cx.dense(5)], memory=1, features=4, n_out=2)
        with pytest.raises(ConfigError, match=r"width 5.*declared output width is 2"):
            cx.rmps_model(m)

    def test_conv_precondition_error_names_layer(self):
        m = cx.ModelSpec([cx.conv1d(4, 9)], memory=5, features=4, n_out=4)
        with pytest.raises(ConfigError, match="layer 0"):
            cx.rmps_model(m)


class TestParamCount:
    def test_dense_layer(self):
        m = cx.ModelSpec([cx.dense(10)], memory=1, features=4, n_out=10)
        rep = cx.rmps_model(m)
        assert rep.layers[0].params == 50

    def test_lstm_layer(self):
        m = cx.ModelSpec([cx.lstm(100), cx.flatten(), cx.dense(2)],
                         memory=1, features=4, n_out=2)
        rep = cx.rmps_model(m)
        assert rep.layers[0].params == 4 * (400 + 10000 + 100)

    def test_conv_layer(self):
        m = cx.ModelSpec([cx.conv1d(8, 3, padding=1), cx.flatten()],
                         memory=5, features=4, n_out=40)
        rep = cx.rmps_model(m)
        assert rep.layers[0].params == 3 * 4 * 8 + 8

    def test_model_total(self):
        assert cx.param_count(MLP3) == 4100 + 10100 + 10100 + 202


class TestBigO:
    @pytest.mark.parametrize("layer,tag", [
        (cx.lstm(5), "O(n d²)"),
        (cx.bilstm(5), "O(n d²)"),
        (cx.conv1d(2, 3), "O(k n d²)"),
        (cx.dense(5), "O(n d)"),
        (cx.flatten(), "O(1)"),
    ])
    def test_tags(self, layer, tag):
        assert cx.big_o(layer) == tag

    def test_pure_function_of_kind(self):
        assert cx.big_o(cx.dense(1)) == cx.big_o(cx.dense(10000))
        assert cx.big_o(cx.lstm(1)) == cx.big_o(cx.lstm(512))


class TestJsonConfig:
    def test_round_trip(self):
        text = cx.model_to_json(CNN_MLP)
        again = cx.model_from_json(text)
        assert again == CNN_MLP

    def test_documented_example(self):
        text = json.dumps({
            "input": {"memory": 10, "features": 4},
            "output": 2,
            "layers": [
                {"kind": "dense", "units": 100},
                {"kind": "dense", "units": 100},
                {"kind": "dense", "units": 100},
                {"kind": "dense", "units": 2, "activation": "linear"},
            ],
        })
        assert cx.rmps_model(cx.model_from_json(text)).total_rmps == 24200

    def test_bad_json_reports_line(self):
        with pytest.raises(ConfigError, match="line"):
            cx.model_from_json("{\n  broken\n}")

    def test_unknown_kind_reports_index(self):
        text = json.dumps({"input": {"memory": 2, "features": 2}, "output": 2,
                           "layers": [{"kind": "pool"}]})
        with pytest.raises(ConfigError, match=r"layers\[0\]"):
            cx.model_from_json(text)

    def test_missing_field_reports_layer(self):
        text = json.dumps({"input": {"memory": 2, "features": 2}, "output": 2,
                           "layers": [{"kind": "dense"}]})
        with pytest.raises(ConfigError, match=r"layers\[0\]"):
            cx.model_from_json(text)


@given(st.integers(1, 12), st.integers(1, 6), st.integers(0, 4),
       st.data())
@settings(max_examples=200, deadline=None)
def test_random_stack_attribution(memory, features, n_hidden, data):
    """Totals always equal per-layer sums on randomly built valid stacks."""
    layers = []
    seq, feat = memory, features
    for _ in range(n_hidden):
        kind = data.draw(st.sampled_from(["dense", "conv1d", "lstm", "bilstm",
                                          "flatten"]))
        if kind == "dense":
            layer = cx.dense(data.draw(st.integers(1, 9)))
        elif kind == "conv1d":
            k = data.draw(st.integers(1, max(1, min(seq, 4))))
            layer = cx.conv1d(data.draw(st.integers(1, 6)), k,
                              stride=data.draw(st.integers(1, 2)),
                              padding=data.draw(st.integers(0, 2)))
        elif kind == "lstm":
            layer = cx.lstm(data.draw(st.integers(1, 6)))
        elif kind == "bilstm":
            layer = cx.bilstm(data.draw(st.integers(1, 6)))
        else:
            layer = cx.flatten()
        layers.append(layer)
        shape = cx._layer_out_shape(cx.TensorShape(1, seq, feat), layer, "t")
        seq, feat = shape.seq, shape.features
    layers.append(cx.dense(data.draw(st.integers(1, 4)), activation="linear"))
    spec = cx.ModelSpec(layers, memory, features, layers[-1].units)
    rep = cx.rmps_model(spec)
    assert sum(r.rmps for r in rep.layers) == rep.total_rmps
    assert rep.total_rmps >= 0
    assert all(r.rmps >= 0 for r in rep.layers)
