import math

import numpy as np
import pytest

from conftest import linear_link
from eqlab import txrx
from eqlab.errors import DatasetError
from eqlab.txrx import dataset as dsm
from eqlab.txrx import fiber as fb


def noise_off(link: fb.LinkConfig, **overrides) -> fb.LinkConfig:
    d = link.to_dict()
    d["edfa_noise_figure_db"] = "-inf"
    d.update(overrides)
    return fb.LinkConfig.from_dict(d)


class TestSplitStep:
    def test_cw_nonlinear_phase_single_step(self):
        # one step, dispersion off, negligible attenuation: the rotation is
        # (8/9) * gamma * P * dz to within float precision
        link = fb.LinkConfig(
            fiber=fb.FiberParams(alpha_db_km=1e-12, dispersion_ps_nm_km=0.0,
                                 gamma_w_km=1.3, span_length_km=50.0,
                                 span_count=1),
            launch_power_dbm=0.0, edfa_noise_figure_db=-math.inf,
            steps_per_span_sim=1)
        p = 2e-3
        cw = np.full(1024, np.sqrt(p), dtype=complex)
        out_x, _ = fb.propagate_waveform(cw, np.zeros_like(cw), link)
        phi = float(np.angle(out_x / cw).mean())
        expect = (8.0 / 9.0) * 1.3 * p * 50.0
        assert abs(phi - expect) / expect < 1e-9

    def test_linear_step_norm_preserving_without_attenuation(self):
        link = fb.LinkConfig(
            fiber=fb.FiberParams(alpha_db_km=1e-300, dispersion_ps_nm_km=17.0,
                                 gamma_w_km=0.0, span_length_km=50.0,
                                 span_count=1),
            launch_power_dbm=0.0, edfa_noise_figure_db=-math.inf)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
        y = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
        x *= 1e-2
        y *= 1e-2
        e0 = np.sum(np.abs(x) ** 2 + np.abs(y) ** 2)
        ox, oy = fb.split_step_span(x, y, link, steps=7)
        e1 = np.sum(np.abs(ox) ** 2 + np.abs(oy) ** 2)
        assert abs(e1 - e0) / e0 < 1e-9

    @pytest.mark.parametrize("spans", [1, 2, 3])
    def test_edfa_exactly_cancels_span_loss(self, spans):
        link = noise_off(fb.LinkConfig(fiber=fb.SSMF, launch_power_dbm=3.0,
                                       steps_per_span_sim=2))
        link = fb.LinkConfig.from_dict({**link.to_dict(),
                                        "fiber": {**link.to_dict()["fiber"],
                                                  "span_count": spans}})
        frame = txrx.transmit(link, 2048, seed=1)
        out = txrx.propagate(frame, link)
        p_in = np.mean(np.abs(frame.x) ** 2 + np.abs(frame.y) ** 2)
        p_out = np.mean(np.abs(out.x) ** 2 + np.abs(out.y) ** 2)
        assert abs(p_out - p_in) / p_in < 1e-9

    def test_dispersion_is_all_pass(self):
        # gamma 0, noise off, single span: spectrum magnitude unchanged
        link = noise_off(linear_link(fb.SSMF, power_dbm=0.0))
        link = fb.LinkConfig.from_dict({**link.to_dict(),
                                        "fiber": {**link.to_dict()["fiber"],
                                                  "span_count": 1}})
        frame = txrx.transmit(link, 2048, seed=2)
        out = txrx.propagate(frame, link)
        in_mag = np.abs(np.fft.fft(frame.x))
        out_mag = np.abs(np.fft.fft(out.x))
        scale = np.max(in_mag)
        np.testing.assert_allclose(out_mag / scale, in_mag / scale, atol=1e-9)

    def test_power_sanity_abort(self):
        link = fb.LinkConfig(fiber=fb.SSMF, launch_power_dbm=35.0)
        with pytest.raises(FloatingPointError, match="30 dBm"):
            txrx.propagate(txrx.transmit(link, 512, seed=0), link)

    def test_ase_variance_matches_psd(self):
        link = fb.LinkConfig(
            fiber=fb.FiberParams(alpha_db_km=0.2, dispersion_ps_nm_km=17.0,
                                 gamma_w_km=0.0, span_length_km=50.0,
                                 span_count=1),
            launch_power_dbm=0.0, edfa_noise_figure_db=4.5,
            steps_per_span_sim=1)
        n_samples = 2 ** 17  # per polarization; > 1e6 total quadratures
        frame = txrx.transmit(link, n_samples // 8, seed=5)
        out_on = txrx.propagate(frame, link)
        out_off = txrx.propagate(frame, noise_off(link))
        d = np.concatenate([out_on.x - out_off.x, out_on.y - out_off.y])
        var = float(np.mean(np.abs(d) ** 2))
        expect = fb.ase_psd_w_hz(link) * link.sim_sample_rate_hz
        assert abs(var - expect) / expect < 0.05


class TestCdCompensate:
    def test_zero_dispersion_is_identity(self):
        x = np.random.default_rng(0).standard_normal(256) + 0j
        np.testing.assert_array_equal(fb.cd_compensate(x, 0.0, 1e9), x)

    @pytest.mark.parametrize("fiber", [fb.SSMF, fb.TWC],
                             ids=["ssmf-250km", "twc-450km"])
    def test_linear_loopback_restores_waveform(self, fiber):
        link = noise_off(linear_link(fiber, power_dbm=2.0))
        frame = txrx.transmit(link, 4096, seed=3)
        out = txrx.propagate(frame, link)
        rx = fb.cd_compensate(out.x, link.fiber.total_dispersion_ps_nm,
                              link.sim_sample_rate_hz)
        ry = fb.cd_compensate(out.y, link.fiber.total_dispersion_ps_nm,
                              link.sim_sample_rate_hz)
        trim = slice(64 * frame.sps, -64 * frame.sps)
        ref = np.sqrt(np.mean(np.abs(frame.x) ** 2))
        assert np.max(np.abs(rx[trim] - frame.x[trim])) / ref < 1e-6
        assert np.max(np.abs(ry[trim] - frame.y[trim])) / ref < 1e-6


class TestDbp:
    def test_matched_steps_invert_exactly(self):
        link = fb.LinkConfig(fiber=fb.FiberParams(0.2, 17.0, 1.2, 50.0, 3),
                             launch_power_dbm=7.0,
                             edfa_noise_figure_db=-math.inf,
                             steps_per_span_sim=8)
        frame = txrx.transmit(link, 4096, seed=4)
        out = txrx.propagate(frame, link)
        bx, by = fb.dbp_compensate(out.x, out.y, link, steps_per_span=8)
        ref = np.sqrt(np.mean(np.abs(frame.x) ** 2))
        assert np.max(np.abs(bx - frame.x)) / ref < 1e-9
        assert np.max(np.abs(by - frame.y)) / ref < 1e-9
        rx = txrx.dbp_equalize(out, link, steps_per_span=8)
        dec, truth = txrx.decide_frame(rx, guard=64)
        assert txrx.ber_count(dec, truth).ber == 0.0

    def test_gamma_zero_dbp_equals_cdc(self):
        link = noise_off(linear_link(fb.TWC, power_dbm=2.0))
        frame = txrx.transmit(link, 2048, seed=6)
        out = txrx.propagate(frame, link)
        bx, _ = fb.dbp_compensate(out.x, out.y, link, steps_per_span=3)
        cx_ = fb.cd_compensate(out.x, link.fiber.total_dispersion_ps_nm,
                               link.sim_sample_rate_hz)
        ref = np.sqrt(np.mean(np.abs(cx_) ** 2))
        assert np.max(np.abs(bx - cx_)) / ref < 1e-9

    def test_dbp3_beats_cdc_on_nonlinear_link(self):
        link = fb.LinkConfig(fiber=fb.TWC, launch_power_dbm=2.0,
                             steps_per_span_sim=10)
        frame = txrx.transmit(link, 8192, seed=7)
        out = txrx.propagate(frame, link)
        cdc = txrx.receive(out, link)
        dbp = txrx.dbp_equalize(out, link, steps_per_span=3)
        ber_cdc = txrx.ber_count(*txrx.decide_frame(cdc, guard=64)).ber
        ber_dbp = txrx.ber_count(*txrx.decide_frame(dbp, guard=64)).ber
        assert ber_dbp <= ber_cdc


class TestReceiveChain:
    @pytest.mark.parametrize("fiber", [fb.SSMF, fb.TWC],
                             ids=["ssmf", "twc"])
    def test_linear_noise_off_chain_error_free(self, fiber):
        link = noise_off(linear_link(fiber, power_dbm=2.0))
        frame = txrx.transmit(link, 20000, seed=8)
        rx = txrx.receive(txrx.propagate(frame, link), link)
        dec, truth = txrx.decide_frame(rx, guard=64)
        res = txrx.ber_count(dec, truth)
        assert res.bit_errors == 0

    def test_determinism_bit_identical(self):
        link = fb.LinkConfig(fiber=fb.TWC, launch_power_dbm=2.0,
                             steps_per_span_sim=5)
        a = txrx.propagate(txrx.transmit(link, 1024, seed=9), link)
        b = txrx.propagate(txrx.transmit(link, 1024, seed=9), link)
        assert a.tobytes() == b.tobytes()
        c = txrx.propagate(txrx.transmit(link, 1024, seed=10), link)
        assert a.tobytes() != c.tobytes()

    def test_back_to_back(self):
        fiber = fb.FiberParams(0.2, 17.0, 1.2, 50.0, 0)  # zero spans
        link = fb.LinkConfig(fiber=fiber, launch_power_dbm=0.0)
        frame = txrx.transmit(link, 2048, seed=11)
        rx = txrx.receive(txrx.propagate(frame, link), link, equalizer="none")
        dec, truth = txrx.decide_frame(rx, guard=64)
        assert txrx.ber_count(dec, truth).bit_errors == 0


class TestDataset:
    def test_same_seed_rejected(self):
        link = linear_link()
        with pytest.raises(DatasetError, match="seeds must differ"):
            dsm.make_dataset(link, 100, 100, 5, 5)

    def test_train_only(self):
        ds = dsm.make_dataset(linear_link(), 500, 0, 5, 6)
        assert ds.test is None
        assert ds.train.n_symbols == 500

    def test_xcorr_measured_and_gated(self, linear_dataset):
        assert 0.0 < linear_dataset.xcorr_max < 1.0
        # tiny splits exceed the gate statistically: enforcing must raise
        with pytest.raises(DatasetError, match="cross-correlation"):
            dsm.make_dataset(linear_link(), 256, 256, 1, 2, xcorr_limit=0.02)

    def test_round_trip(self, tmp_path, linear_dataset):
        p = str(tmp_path / "ds.eqds")
        dsm.save_dataset(linear_dataset, p)
        again = dsm.load_dataset(p)
        np.testing.assert_array_equal(again.train.rx_x, linear_dataset.train.rx_x)
        np.testing.assert_array_equal(again.test.idx_y, linear_dataset.test.idx_y)
        assert again.link == linear_dataset.link
        assert again.guard == linear_dataset.guard
        assert again.xcorr_max == linear_dataset.xcorr_max

    def test_deterministic_bytes(self, tmp_path):
        link = linear_link()
        paths = []
        for i in range(2):
            ds = dsm.make_dataset(link, 400, 400, 7, 8, xcorr_limit=None)
            p = tmp_path / f"d{i}.eqds"
            dsm.save_dataset(ds, str(p))
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_unknown_version_rejected(self, tmp_path):
        ds = dsm.make_dataset(linear_link(), 100, 0, 1, 2)
        p = str(tmp_path / "v.eqds")
        dsm.save_dataset(ds, p)
        raw = bytearray(open(p, "rb").read())
        blob = raw[8:8 + np.frombuffer(raw[4:8], "<u4")[0]]
        import json
        hdr = json.loads(bytes(blob))
        hdr["version"] = 99
        new = json.dumps(hdr, sort_keys=True).encode()
        with open(p, "wb") as f:
            f.write(b"EQDS")
            f.write(np.uint32(len(new)).tobytes())
            f.write(new)
            f.write(raw[8 + len(blob):])
        with pytest.raises(DatasetError, match="version"):
            dsm.load_dataset(p)

    def test_truth_has_unit_energy_constellation(self, linear_dataset):
        tx = linear_dataset.train.tx_x
        assert np.mean(np.abs(tx) ** 2) == pytest.approx(1.0, abs=0.05)
