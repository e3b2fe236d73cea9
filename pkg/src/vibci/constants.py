"""Default constants shared by the whole pipeline.

Everything the synthetic generator invents (topographies, class signatures,
noise recipe parameters) lives here so experiments stay auditable.
"""

# 10/20 labels of the 64-channel cap, in canonical index order.
MONTAGE_64 = (
    "Fp1", "Fp2", "AF3", "AF4", "AF7", "AF8", "AFz",
    "F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "Fz",
    "FC1", "FC2", "FC3", "FC4", "FC5", "FC6",
    "FT7", "FT8", "FT9", "FT10",
    "C1", "C2", "C3", "C4", "C5", "C6", "Cz",
    "T7", "T8",
    "CP1", "CP2", "CP3", "CP4", "CP5", "CP6", "CPz",
    "TP7", "TP8", "TP9", "TP10",
    "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "Pz",
    "POz", "PO3", "PO4", "PO7", "PO8",
    "O1", "O2", "Oz", "Iz",
)

# Electrodes used for decoding (prefrontal + occipital).
SHORTLIST = ("Fp1", "Fp2", "AFz", "AF3", "AF4", "POz", "O1", "O2", "Oz", "Iz")

RECORDING_FS_HZ = 1000.0
BAND_HZ = (0.5, 13.0)
FULL_RATE_FIR_ORDER = 30
PIPELINE_FIR_ORDER = 200
DECIMATION = 10

EPOCH_LEN_S = 4.0
REST_LEN_S = 2.0
STATS_EPOCH_LEN_S = 2.0
WINDOW_S = 2.0
OVERLAP = 0.5
TRAIN_FRACTION = 0.8
TRIALS_PER_CLASS = 50
N_SUBJECTS = 8

EPOCHS = 200
BATCH_SIZE = 16
LEARNING_RATE = 1e-4

N_PERM = 1000
ALPHA = 0.01
REPETITIONS = 5

SESSION_TRIALS_PER_CLASS = 10
SESSION_RUNS = 3

# Synthetic generator -------------------------------------------------------

BACKGROUND_UV = 10.0
# Corner frequencies (Hz) of the equal-variance AR(1) components whose sum
# approximates a 1/f spectrum between the first and last corner.
NOISE_CORNERS_HZ = (0.2, 2.0, 20.0, 200.0)
# Silence before the first and after the last trial, seconds.
RECORDING_PAD_S = 1.0
# Fraction of an imagery epoch tapered at each end of a burst envelope.
BURST_TAPER = 0.2
FREQ_JITTER_HZ = 0.25
AMP_JITTER = 0.15

ALPHA_TOPOGRAPHY = {
    "Oz": 1.0, "O1": 0.9, "O2": 0.9, "Iz": 0.85, "POz": 0.85,
    "PO3": 0.5, "PO4": 0.5, "PO7": 0.4, "PO8": 0.4,
    "Pz": 0.2, "P1": 0.15, "P2": 0.15, "P3": 0.1, "P4": 0.1,
    "Fp1": 0.25, "Fp2": 0.25, "AFz": 0.3, "AF3": 0.3, "AF4": 0.3,
}
DELTA_TOPOGRAPHY = {
    "AF3": 1.0, "AFz": 0.95, "Fp1": 0.9, "Fp2": 0.9, "AF4": 0.9,
    "AF7": 0.5, "AF8": 0.5, "Fz": 0.4, "F1": 0.3, "F2": 0.3,
    "F3": 0.2, "F4": 0.2,
    "Oz": 0.3, "O1": 0.25, "O2": 0.25, "Iz": 0.25, "POz": 0.25,
}

# (alpha_hz, delta_hz, alpha_amp, delta_amp) per imagery class.
CLASS_SIGNATURES = {
    "PourWater": (8.5, 1.0, 1.0, 1.0),
    "OpenDoor": (10.0, 1.75, 0.8, 0.8),
    "EatFood": (11.5, 2.5, 0.65, 0.65),
    "PickUpPhone": (12.5, 3.5, 0.5, 0.5),
}
