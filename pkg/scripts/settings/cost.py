# Pricing profiles, USD per million characters (commercial APIs) and
# USD per GPU hour (open-source models on cloud GPUs).
PRICING_PROFILES = {
    "paper-2021": {
        "commercial_per_million": [20.0, 20.0, 10.0],  # Google, IBM, Microsoft
        "gpu_per_hour": [2.48, 3.06],  # V100 on Google Cloud, IBM Cloud
    },
}
DEFAULT_PRICING_PROFILE = "paper-2021"

RECURRING_UNIT = 1000  # Recurring costs are reported per 1k examples
USD_DECIMALS = 2
DISCREPANCY_TOLERANCE = 0.01  # Relative gap flagged against published cells

# Dataset statistics shipped with the default pricing profile
REFERENCE_STATS = {
    "qa": {
        "train": {"characters": 17_688_764, "avg_chars_per_example": 936.11},
        "test": {"characters": 38_250, "avg_chars_per_example": 1006.57},
    },
    "nli": {
        "train": {"characters": 56_521_137, "avg_chars_per_example": 144.49},
        "test": {"characters": 219_834, "avg_chars_per_example": 89.80},
    },
    "ranking": {
        "collection": {"characters": 3_047_540_622, "avg_chars_per_example": 344.67},
        "train_queries": {"characters": 28_667_746, "avg_chars_per_example": 35.44},
        "queries": {"characters": 3_615_835, "avg_chars_per_example": 35.77},
    },
}

# Measured throughput, batch size 32
REFERENCE_THROUGHPUT = {
    "qa": {"seconds_per_batch": 2.50, "batch_size": 32, "wall_hours": 1.0},
    "nli": {"seconds_per_batch": 0.78, "batch_size": 32, "wall_hours": 2.25},
    "ranking-s1": {"seconds_per_batch": 0.72, "batch_size": 32, "wall_hours": 51.0},
    "ranking-s2": {"seconds_per_batch": 680.64, "batch_size": 32, "wall_hours": 51.0},
}

# Published cost/latency cells, used only to flag discrepancies.
# Each row: (task, scenario, throughput key, train split, published cells)
REFERENCE_TABLE = (
    ("qa", "zero-shot", "qa", "train", {}),
    ("qa", "translate-train", "qa", "train",
     {"one_time_commercial": (299.17, 2), "one_time_opensource": (2.77, 2)}),
    ("qa", "translate-infer", "qa", "train",
     {"recurring_commercial": (16.78, 2), "recurring_opensource": (0.06, 2),
      "added_latency": (2.50, 2)}),
    ("nli", "zero-shot", "nli", "train", {}),
    ("nli", "translate-train", "nli", "train",
     {"one_time_commercial": (941.67, 2), "one_time_opensource": (6.24, 2)}),
    ("nli", "translate-infer", "nli", "train",
     {"recurring_commercial": (1.50, 2), "recurring_opensource": (0.02, 2),
      "added_latency": (0.78, 2)}),
    ("ranking", "zero-shot", "ranking-s1", "collection", {}),
    ("ranking", "translate-train", "ranking-s1", "collection",
     {"one_time_commercial": (50_793, 0), "one_time_opensource": (141.27, 2)}),
    ("ranking", "translate-infer-s1", "ranking-s1", "collection",
     {"one_time_commercial": (50_793, 0), "one_time_opensource": (141.27, 2),
      "recurring_commercial": (0.70, 2), "recurring_opensource": (0.01, 2),
      "added_latency": (0.72, 2)}),
    ("ranking", "translate-infer-s2", "ranking-s2", "collection",
     {"recurring_commercial": (5_733, 0), "recurring_opensource": (16.36, 2),
      "added_latency": (680.64, 2)}),
)

# Splits read by each scenario, per task
TRAIN_SPLITS = {"qa": "train", "nli": "train", "ranking": "collection"}
INFER_SPLITS = {"qa": "test", "nli": "test", "ranking": "queries"}
PASSAGE_SPLIT = "collection"  # Strategy 2 translates top-k passages per query

SCENARIOS = (
    "zero-shot",
    "translate-train",
    "translate-infer",
    "translate-infer-s1",
    "translate-infer-s2",
)
