import numpy as np

# === Binary matrix format ===
MATRIX_MAGIC = b"HSAP"
MATRIX_VERSION = 1
MATRIX_HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("rows", "<u8"),
        ("cols", "<u8"),
    ]
)
MATRIX_PAYLOAD_DTYPE = np.dtype("<f8")

# === CSV artifacts ===
TRACE_COLUMNS = ("iteration", "objective", "kind", "source_id")
PROVENANCE_COLUMNS = ("i", "j", "src_a", "src_b")
PROFILE_COLUMNS = ("k", "final_objective")
PROVENANCE_SUFFIX = ".provenance.csv"

# === Numerical tolerances ===
MGS_TOL = 1e-10
ORTHONORMAL_TOL = 1e-8
DEGENERACY_TOL = 1e-10
UNIT_NORM_TOL = 1e-12
ENERGY_SLACK = 1e-12

# === Defaults ===
DEFAULT_SECANT_CAP = 5_000_000
DEFAULT_ENERGY = 0.95
DEFAULT_ALPHA = 0.01
DEFAULT_ANCHORS = 20
DEFAULT_WITHIN_SAMPLES = 500
DEFAULT_STOP_TOL = 1e-6
DEFAULT_STOP_WINDOW = 20
SYNTH_PER_LINE = 100
SYNTH_PLANE = 500
SYNTH_RANGE = (-5.0, 5.0)

# Независимые потоки случайных чисел, производные от одного seed
STREAM_KMEANS = 1
STREAM_ANCHORS = 2
STREAM_WITHIN = 3
STREAM_RESAMPLE = 4
STREAM_INIT = 5
