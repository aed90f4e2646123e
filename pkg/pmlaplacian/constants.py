# Exponent grid used by the sweep experiments.
P_GRID = (-10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0)

# Solver defaults
KRYLOV_MAX_DIM = 60
OUTER_TOL = 1e-8
OUTER_MAX_ITER = 2000
GUARD_VECTORS = 2

# Largest vertex count for which the dense power mean path is allowed.
DENSE_LIMIT = 2000

KMEANS_RESTARTS = 20

# Exact permutation matching in clustering_error is limited to this many labels.
MAX_MATCHED_LABELS = 8

RESAMPLE_ATTEMPTS = 100

BENCHMARK_SIZES = (10000, 20000, 30000, 40000)
BENCHMARK_P = (-1.0, -2.0, -5.0, -10.0)

LAYER_FILE_PATTERN = "layer_{:03d}.mtx"
META_FILE = "meta.json"
