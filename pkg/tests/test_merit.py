import math
import warnings

import numpy as np
import pytest

from wdmpairlab.detection import DetectorSpec, SourceSpec, SplittingMode, forward_model
from wdmpairlab.merit import (
    ENTANGLEMENT_BOUND,
    OutOfSweepRangeWarning,
    brightness,
    invert_p,
    sweep_fom,
    vmax,
)
from wdmpairlab.spectral import DemuxSpec

DET = SplittingMode.DETERMINISTIC
STAT = SplittingMode.STATISTICAL


class TestVmax:
    def test_points(self):
        assert vmax(0.0) == 1.0
        assert vmax(1.0) == 1.0 / 3.0
        assert vmax((math.sqrt(2) - 1) / 2) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_strictly_decreasing(self):
        r = np.linspace(0, 50, 500)
        v = [vmax(x) for x in r]
        assert np.all(np.diff(v) < 0)
        assert vmax(1e12) < 1e-11

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            vmax(-0.1)


class TestInvertP:
    def test_deterministic(self):
        assert invert_p(0.05, 0.1, 0.1, DET) == pytest.approx(0.05)

    def test_statistical(self):
        assert invert_p(0.05, 0.1, 0.1, STAT) == pytest.approx(0.025)

    def test_out_of_range_flag(self):
        with pytest.warns(OutOfSweepRangeWarning):
            invert_p(0.5, 0.1, 0.1, DET)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            invert_p(0.1, 0.1, 0.1, DET)

    @pytest.mark.parametrize("i1, i2", [(0.1, 0.2), (0.0, 0.0), (-1.0, 0.1)])
    def test_invalid_integrals(self, i1, i2):
        with pytest.raises(ValueError):
            invert_p(0.05, i1, i2, DET)


class TestBrightness:
    det = DetectorSpec.gated_ingaas(0.1)

    def test_product(self):
        assert brightness(5e-4, self.det, 1.0) == pytest.approx(1000.0)
        assert brightness(0.0, self.det, 1.0) == 0.0
        assert brightness(5e-4, self.det, 0.5) == pytest.approx(500.0)


@pytest.fixture
def detector():
    return DetectorSpec(2e6, 20.0, 0.0, 0.0, 1.0)


def demux(shape="flattop", peak=1.0, order=4):
    return DemuxSpec.synthetic("DG", range(21, 28), shape=shape, peak=peak, order=order)


class TestSweep:
    def test_two_points_decreasing(self, detector):
        pts = sweep_fom(demux(), (23, 25), detector, n=2)
        assert [p.p_inband for p in pts] == [0.01, 0.18]
        assert pts[0].v_max > pts[1].v_max

    def test_matches_forward_model(self, detector):
        pts = sweep_fom(demux("gaussian"), (23, 25), detector, n=5)
        for pt in pts:
            ref = forward_model(SourceSpec(384.8, pt.p_inband), 1.0, 1.0, 1 / math.sqrt(2), DET)
            assert pt.p_tc == pytest.approx(ref.p_tc, rel=1e-9)
            assert pt.v_max == pytest.approx(vmax(ref.ratio_ac_tc), rel=1e-9)

    def test_deterministic_beats_statistical(self):
        det = DetectorSpec.gated_ingaas(0.1)
        d = sweep_fom(demux(), (23, 25), det, n=18)
        s = sweep_fom(demux(), 24, det, n=18)
        assert all(a.mode is DET and b.mode is STAT for a, b in zip(d, s))
        assert all(a.v_max >= b.v_max for a, b in zip(d, s))

    def test_entanglement_flag(self, detector):
        pts = sweep_fom(demux("gaussian"), 24, detector, p_min=0.01, p_max=0.3, n=30)
        flags = [p.entanglable for p in pts]
        assert flags[0] and not flags[-1]
        for p in pts:
            assert p.entanglable == (p.v_max > ENTANGLEMENT_BOUND)

    def test_log_spacing(self, detector):
        pts = sweep_fom(demux(), (23, 25), detector, n=3, spacing="log")
        assert [p.p_inband for p in pts] == pytest.approx([0.01, math.sqrt(0.01 * 0.18), 0.18])

    def test_asymmetric_pair_rejected(self, detector):
        with pytest.raises(ValueError, match="symmetric"):
            sweep_fom(demux(), (23, 26), detector, pump_thz=384.8)

    def test_unknown_channel(self, detector):
        with pytest.raises(KeyError):
            sweep_fom(demux(), (23, 45), detector)

    def test_rectangle_dominates_gaussian(self, detector):
        rect = sweep_fom(demux("rectangle"), (23, 25), detector, n=10)
        gauss = sweep_fom(demux("gaussian"), (23, 25), detector, n=10)
        assert all(r.v_max > g.v_max for r, g in zip(rect, gauss))

    def test_higher_peak_brighter(self):
        det = DetectorSpec.gated_ingaas(0.1)
        hi = sweep_fom(demux(peak=0.82), (23, 25), det, n=10)
        lo = sweep_fom(demux(peak=0.69), (23, 25), det, n=10)
        assert all(h.brightness_cps > l.brightness_cps for h, l in zip(hi, lo))

    def test_n_too_small(self, detector):
        with pytest.raises(ValueError):
            sweep_fom(demux(), (23, 25), detector, n=1)
