import csv
import io

import numpy as np
import pytest

from dctnet import autograd as ag
from dctnet import instrument
from dctnet.complexity import (ActivationLayer, BatchNormLayer, ConvLayer,
                               LinearLayer, PoolLayer, ReducerLayer,
                               count_layer, count_network, emit_table)
from dctnet.errors import ShapeMismatch
from dctnet.resnet import Network, build_dct_network, build_rgb_resnet50
from dctnet.transforms import ReducerSpec

# Closed-form totals, computed independently by summing the layer
# formulas over the architecture (stride on the first 1x1 of each
# bottleneck, projections counted, batch norm 2C params, classifier bias).
EXPECTED = {
    "rgb": (3_857_973_248, 25_557_032),
    "entry2": (3_248_635_904, 25_560_232),
    "entry3": (3_027_058_688, 25_274_856),
    "entry4": (8_261_419_008, 23_834_216),
    "entry5": (10_766_204_928, 15_802_216),
    "dct192": (5_377_703_936, 28_278_632),
}


def _arch(key):
    if key == "rgb":
        return build_rgb_resnet50()
    if key == "dct192":
        return build_dct_network(None)
    entry = int(key[-1])
    widths = {2: 64, 3: 128, 4: 256, 5: 512}
    return build_dct_network(ReducerSpec("ccpp", 192, widths[entry]),
                             entry_stage=entry)


class TestCountLayer:
    def test_pointwise_conv_example(self):
        macs, params, out = count_layer(
            ConvLayer("reduce", 192, 64, 1, bias=True), (192, 28, 28))
        assert macs == 9_633_792
        assert params == 192 * 64 + 64
        assert out == (64, 28, 28)

    def test_classifier_example(self):
        macs, params, out = count_layer(LinearLayer("fc", 2048, 1000), (2048,))
        assert macs == 2_048_000
        assert params == 2_049_000
        assert out == (1000,)

    def test_relu_is_free(self):
        assert count_layer(ActivationLayer("r", "relu"), (7, 3, 3))[:2] == (0, 0)

    def test_pool_and_softmax_free(self):
        macs, params, out = count_layer(PoolLayer("p", "max", 3, 2, 1), (8, 10, 10))
        assert (macs, params) == (0, 0)
        assert out == (8, 5, 5)
        assert count_layer(ActivationLayer("s", "softmax"), (10,))[:2] == (0, 0)

    def test_batch_norm_params(self):
        macs, params, _ = count_layer(BatchNormLayer("bn", 192), (192, 28, 28))
        assert (macs, params) == (0, 384)

    def test_minimal_network_single_layer(self):
        # input -> global pool -> classifier over 192 channels
        _, _, pooled = count_layer(PoolLayer("gap", "gap"), (192, 28, 28))
        macs, params, _ = count_layer(LinearLayer("fc", 192, 1000), pooled)
        assert params == 192 * 1000 + 1000
        assert macs == 192 * 1000

    def test_conv_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            count_layer(ConvLayer("c", 3, 8, 3), (4, 10, 10))

    def test_reducer_counts(self):
        lp = ReducerLayer("r", ReducerSpec("lp", 192, 64))
        assert count_layer(lp, (192, 28, 28))[:2] == (192 * 64 * 784, 192 * 64)
        la = ReducerLayer("r", ReducerSpec("la", 192, 64))
        assert count_layer(la, (192, 28, 28))[:2] == (2 * 192 * 784, 192)
        fbs = ReducerLayer("r", ReducerSpec("fbs", 192, 96, k=32))
        assert count_layer(fbs, (192, 28, 28))[:2] == (0, 0)


class TestCountNetwork:
    @pytest.mark.parametrize("key", sorted(EXPECTED))
    def test_closed_form_totals(self, key):
        report = count_network(_arch(key))
        assert (report.total_macs, report.total_params) == EXPECTED[key]

    def test_totals_equal_row_sums(self):
        report = count_network(_arch("rgb"))
        assert report.total_macs == sum(r.macs for r in report.rows)
        assert report.total_params == sum(r.params for r in report.rows)

    def test_parameterized_layers_appear_once(self):
        report = count_network(_arch("entry2"))
        names = [r.name for r in report.rows]
        assert len(names) == len(set(names))
        param_rows = [r for r in report.rows if r.params > 0]
        # every conv/bn/linear/reducer row carries parameters exactly once
        assert all(r.params > 0 for r in param_rows)

    def test_monotonicity_wider_classifier(self):
        small = count_network(build_rgb_resnet50(classes=1000))
        big = count_network(build_rgb_resnet50(classes=1001))
        assert big.total_params > small.total_params
        assert big.total_macs > small.total_macs

    def test_gflops_ordering_of_skip_variants(self):
        g = {k: count_network(_arch(k)).gflops
             for k in ("entry2", "entry3", "entry4", "entry5")}
        assert g["entry3"] < g["entry2"] < g["entry4"] < g["entry5"]

    def test_counter_engine_agreement(self):
        # instrumented forward MACs match the analytic count exactly
        arch = build_dct_network(ReducerSpec("lp", 192, 64), classes=5)
        shape = (192, 4, 4)
        report = count_network(arch, shape)
        analytic = sum(r.macs for r in report.rows
                       if r.name != "reducer")          # conv + linear rows
        net = Network(arch, seed=0)
        x = np.random.default_rng(0).normal(size=(1,) + shape).astype(np.float32)
        instrument.reset()
        with instrument.count_macs(), ag.no_grad():
            net.forward(x)
        engine = instrument.counters["conv_macs"] + instrument.counters["linear_macs"]
        assert engine == analytic


class TestEmitTable:
    def test_skip_variants_table(self):
        reports = [count_network(_arch(k))
                   for k in ("entry2", "entry3", "entry4", "entry5")]
        for r, name in zip(reports, ["Skip the first stage",
                                     "Skip the first and second stages",
                                     "Skip the first, second, and third stages",
                                     "Skip the first, second, third, and fourth stages"]):
            r.name = name
        text, csv_text = emit_table(reports)
        lines = text.strip().splitlines()
        assert lines[0].startswith("Approach")
        assert len(lines) == 2 + 4
        assert lines[2].startswith("Skip the first stage")
        assert "3.25" in lines[2] and "25.6M" in lines[2]
        assert "10.77" in lines[5] and "15.8M" in lines[5]

    def test_single_report(self):
        text, _ = emit_table([count_network(_arch("rgb"))])
        lines = text.strip().splitlines()
        assert len(lines) == 3
        assert "3.86" in lines[2] and "25.6M" in lines[2]

    def test_csv_round_trip(self):
        reports = [count_network(_arch(k)) for k in ("rgb", "entry5")]
        _, csv_text = emit_table(reports)
        rows = list(csv.DictReader(io.StringIO(csv_text)))
        assert len(rows) == 2
        for row, report in zip(rows, reports):
            assert row["approach"] == report.name
            assert float(row["gflops"]) == report.total_macs / 1e9
            assert int(row["params"]) == report.total_params

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            emit_table([])
