import numpy as np
import pytest

from eqlab import bench
from eqlab.neural import ArchFamily, Network, family_model
from eqlab.search import Budget


def tiny_net():
    return Network(family_model(ArchFamily.MLP3, 5, dict(n1=8, n2=8, n3=8)),
                   seed=0)


class TestMeasureLatency:
    def test_zero_iterations_rejected(self):
        with pytest.raises(ValueError, match="iters"):
            bench.measure_latency(tiny_net(), np.zeros((4, 5, 4)), warmup=0,
                                  iters=0)

    def test_stats_positive_and_ordered(self):
        stats = bench.measure_latency(tiny_net(), np.zeros((8, 5, 4)),
                                      warmup=2, iters=50)
        assert stats["mean_s"] > 0
        assert stats["median_s"] > 0
        assert stats["p95_s"] >= stats["median_s"]
        assert stats["batch"] == 8

    def test_repeatability_within_20_percent(self):
        # harness health check on an idle host
        net = Network(family_model(ArchFamily.MLP3, 21,
                                   dict(n1=64, n2=64, n3=64)), seed=0)
        x = np.zeros((64, 21, 4))
        a = bench.measure_latency(net, x, warmup=10, iters=150)["mean_s"]
        b = bench.measure_latency(net, x, warmup=10, iters=150)["mean_s"]
        assert abs(a - b) / min(a, b) < 0.20

    def test_batch_amortization(self):
        net = Network(family_model(ArchFamily.MLP3, 21,
                                   dict(n1=32, n2=32, n3=32)), seed=0)
        t1 = bench.measure_latency(net, np.zeros((1, 21, 4)), warmup=10,
                                   iters=200)["mean_s"]
        t256 = bench.measure_latency(net, np.zeros((256, 21, 4)), warmup=10,
                                     iters=200)["mean_s"]
        assert t256 <= t1

    def test_refuses_configured_parallelism(self, monkeypatch):
        monkeypatch.setenv(bench.NEURAL_THREADS_ENV, "4")
        with pytest.raises(RuntimeError, match="single-threaded"):
            bench.measure_latency(tiny_net(), np.zeros((4, 5, 4)), warmup=0,
                                  iters=10)


class TestLatencyVsRmps:
    def test_empty_decades(self):
        rows, rho = bench.latency_vs_rmps([ArchFamily.MLP3], [], batches=(8,))
        assert rows == [] and rho == {}

    def test_grid_and_spearman(self):
        rows, rho = bench.latency_vs_rmps(
            [ArchFamily.MLP3, ArchFamily.CNN_MLP2],
            [Budget.parse("1e4"), Budget.parse("1e5")],
            batches=(64,), warmup=3, iters=100, memory=21)
        assert len(rows) == 4
        for r in rows:
            assert r.rmps <= int(float(r.decade))
        assert set(rho) == {("mlp", 64), ("cnn-mlp", 64)}
        for v in rho.values():
            assert v == pytest.approx(1.0)

    def test_feedforward_means_within_2x_at_same_budget(self):
        # best-of-3 repetitions, timeit-style, to suppress co-tenant noise
        ratios = []
        for _ in range(3):
            rows, _ = bench.latency_vs_rmps(
                [ArchFamily.MLP3, ArchFamily.CNN_MLP2], [Budget.parse("1e6")],
                batches=(256,), warmup=10, iters=100, memory=41)
            mlp = next(r for r in rows if r.family == "mlp")
            cnn = next(r for r in rows if r.family == "cnn-mlp")
            ratios.append(max(mlp.mean_s, cnn.mean_s)
                          / min(mlp.mean_s, cnn.mean_s))
        assert min(ratios) < 2.0

    def test_schema_deterministic_apart_from_timings(self, tmp_path):
        def csv_structure(name):
            rows, _ = bench.latency_vs_rmps(
                [ArchFamily.MLP3], [Budget.parse("1e4")], batches=(16,),
                warmup=1, iters=100, memory=21)
            p = tmp_path / name
            bench.write_latency_csv(rows, str(p), manifest_hash="feed")
            out = []
            for line in p.read_text().splitlines():
                cells = line.split(",")
                if len(cells) > 7 and cells[2].isdigit():
                    cells[7:10] = ["T", "T", "T"]  # blank the timing columns
                out.append(",".join(cells))
            return out

        assert csv_structure("a.csv") == csv_structure("b.csv")

    def test_iters_below_minimum_rejected(self):
        with pytest.raises(ValueError, match="100"):
            bench.latency_vs_rmps([ArchFamily.MLP3], [Budget.parse("1e4")],
                                  iters=10)
