"""Configuration constants for the project."""

DEFAULT_SAMPLE_INTERVAL = 100  # steps between stats/trajectory samples
DEFAULT_SNAPSHOT_INTERVAL = 0  # 0 disables snapshot rendering
DEFAULT_SUPERSAMPLE = 4
DEFAULT_PIXELS_PER_SITE = 2  # default output pitch; even, so sheared rows stay pixel-aligned
DEFAULT_DELTA_COL = 35  # grayscale similarity threshold for image FFN
DEFAULT_LANES = 1
DEFAULT_BENCH_REPEATS = 3

DOMAIN_SIZE = 7  # center + six neighbours
N_NEIGHBORS = 6

# Relative tolerance (per site) for incremental vs recomputed energy
ENERGY_TOLERANCE_PER_SITE = 1e-9

STATS_FILE_NAME = "stats.csv"
TRAJECTORY_FILE_NAME = "trajectory.txt"
FINAL_FRAME_FILE_NAME = "final.txt"
METADATA_FILE_NAME = "metadata.json"
BENCH_FILE_NAME = "bench.csv"
SNAPSHOT_FILE_TEMPLATE = "frame_{step}.{ext}"

STATS_COLUMNS = (
    "step",
    "energy_kT",
    "ffn_stochastic",
    "ffn_exact",
    "n_clusters",
    "avg_cluster_size",
    "weight_avg_cluster_size",
    "largest_cluster",
)
