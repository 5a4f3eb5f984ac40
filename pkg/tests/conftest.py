import numpy as np
import pytest

from appear import montage
from appear.core import ChannelInfo, Recording


# reference mean heart rates per session (ECG, ICA, oximetry), in bpm
HR_ROWS = [
    # hr_ecg, hr_ica, hr_oxi
    (62.79, 63.18, 63.17), (62.86, 117.83, 63.28), (66.27, 66.44, 66.46),
    (72.62, 72.56, 72.52), (69.59, 69.53, 69.61), (79.46, 79.56, 79.29),
    (76.00, 76.03, 76.06), (44.98, 45.03, 45.06),
    (66.58, 66.07, 66.49), (68.93, 64.45, 64.57), (65.44, 64.49, 64.52),
    (75.80, 76.33, 75.86), (76.99, 76.87, 76.90), (85.01, 85.08, 84.49),
    (77.31, 75.46, 75.27), (43.86, 44.00, 44.03),
]


def scalp_channels(labels=montage.DEFAULT_31):
    return tuple(ChannelInfo.from_label(l) for l in labels)


def make_rec(data, fs=250.0, labels=None, markers=()):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if labels is None:
        labels = montage.DEFAULT_31[:data.shape[0]]
    return Recording(data, fs, scalp_channels(labels), markers)


def tone(freq, fs, seconds, amp=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, repeated after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
