"""Standard 10-10 electrode positions projected onto the unit head disc.

Positions come from an idealised spherical head: Cz at the vertex, the
Fpz/T7/Oz/T8 ring at 72 degrees polar angle and the nasion/preauricular
level at 90 degrees. Intermediate electrodes are spherical interpolations
along their row, and the sphere is flattened with an azimuthal equidistant
projection (x to the right ear, y to the nose). The disc edge sits just
below the preauricular level, so every listed electrode lies inside it.
"""

import numpy as np

from .errors import FormatError

# polar angle (degrees) that maps onto the unit circle
_EDGE_DEG = 92.0

# lateral azimuth (degrees, nose = 0, right positive) of the ring electrode
# ending each row, and the polar angle / azimuth of the row's midline point
_ROWS = {
    "AF": (36.0, 54.0, 0.0),
    "F": (54.0, 36.0, 0.0),
    "FC": (72.0, 18.0, 0.0),
    "C": (90.0, 0.0, 0.0),
    "CP": (108.0, 18.0, 180.0),
    "P": (126.0, 36.0, 180.0),
    "PO": (144.0, 54.0, 180.0),
}
_ROW_LATERAL = {"AF": "AF7", "F": "F7", "FC": "FT7", "C": "T7", "CP": "TP7",
                "P": "P7", "PO": "PO7"}

ECG_LABELS = ("ECG", "EKG")

# the 31 scalp channels processed by default
DEFAULT_31 = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "FC5", "FC1", "FCz", "FC2", "FC6",
    "T7", "C3", "Cz", "C4", "T8",
    "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
    "P7", "P3", "Pz", "P4", "P8",
    "O1", "Oz", "O2",
)


def _unit(theta_deg, az_deg):
    th, az = np.radians(theta_deg), np.radians(az_deg)
    return np.array([np.sin(th) * np.sin(az), np.sin(th) * np.cos(az), np.cos(th)])


def _slerp(a, b, t):
    omega = np.arccos(np.clip(a @ b, -1.0, 1.0))
    if omega < 1e-12:
        return a.copy()
    return (np.sin((1 - t) * omega) * a + np.sin(t * omega) * b) / np.sin(omega)


def _to_disc(v):
    theta = np.degrees(np.arccos(np.clip(v[2], -1.0, 1.0)))
    az = np.arctan2(v[0], v[1])
    r = theta / _EDGE_DEG
    return (float(r * np.sin(az)), float(r * np.cos(az)))


def _build_table():
    table = {}
    sph = {}
    for name, az in (("Fp1", -18.0), ("Fp2", 18.0), ("O1", -162.0), ("O2", 162.0),
                     ("Fpz", 0.0), ("Oz", 180.0)):
        sph[name] = _unit(72.0, az)
    for name, az in (("FT9", -72.0), ("FT10", 72.0), ("TP9", -108.0),
                     ("TP10", 108.0), ("P9", -126.0), ("P10", 126.0)):
        sph[name] = _unit(90.0, az)
    for row, (lat_az, mid_theta, mid_az) in _ROWS.items():
        mid = _unit(mid_theta, mid_az)
        sph[row + "z"] = mid
        for side, sign in (("left", -1.0), ("right", 1.0)):
            lateral = _unit(72.0, sign * lat_az)
            numbers = (7, 5, 3, 1) if side == "left" else (8, 6, 4, 2)
            for k, num in enumerate(numbers):
                label = f"{row}{num}"
                if row == "C" and num in (7, 8):
                    label = "T7" if num == 7 else "T8"
                elif row == "FC" and num in (7, 8):
                    label = f"FT{num}"
                elif row == "CP" and num in (7, 8):
                    label = f"TP{num}"
                sph[label] = _slerp(lateral, mid, k * 0.25)
    for label, v in sph.items():
        table[label] = _to_disc(v)
    return table


POSITIONS = _build_table()
_LOOKUP = {k.lower(): k for k in POSITIONS}


def canonical_label(label):
    """Return the table spelling of ``label`` (case-insensitive) or None."""
    return _LOOKUP.get(label.strip().lower())


def position_of(label):
    """Disc coordinates of a 10-10 label; raises FormatError if unknown."""
    key = canonical_label(label)
    if key is None:
        raise FormatError(f"unknown electrode label {label!r}")
    return POSITIONS[key]


def is_ecg_label(label):
    return label.strip().upper() in ECG_LABELS
