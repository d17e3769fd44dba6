"""
Configuration file for the Extract-and-Generate corpus builder
Contains all global settings and constants
"""

# Application Settings
APP_NAME = "Multi-way Corpus Builder"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = "Builds multi-way aligned translation corpora from English-centric bitext"

# Reserved tokens
SEP_TOKEN = "<sep>"
LANGUAGE_TOKEN_FORMAT = "<2{code}>"
LANGUAGE_TOKEN_PATTERN = r"^<2([a-z0-9][a-z0-9_-]*)>$"

# Normalization
UNICODE_FORM = "NFC"
PIVOT_CASE_FOLD = True      # similarity is computed on case-folded pivot tokens
OTHER_CASE_FOLD = False

# Extraction defaults
DEFAULT_GAMMA = 0.3
DEFAULT_QGRAM = 2
DEFAULT_MIN_TOKENS = 1
DEFAULT_MAX_TOKENS = None   # None = no upper bound
DEFAULT_MAX_PAIRS_PER_EXAMPLE = 0   # 0 = unlimited
DEFAULT_BUCKET_WIDTH = 4
BRUTE_FORCE_MAX_PAIRS = 4_000_000

# Noising defaults
DEFAULT_BETA = 0.5
DEFAULT_OP_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)   # insert, remove, substitute
NOISE_OPS = ("insert", "remove", "substitute")
DEFAULT_VOCAB_SAMPLING = "frequency"
DEFAULT_MAX_OPS = 0         # 0 = no cap per sentence
DEFAULT_SEED = 1234

# Hypothesis filters
DEFAULT_MIN_LENGTH_RATIO = 0.5
DEFAULT_MAX_LENGTH_RATIO = 2.0
REJECTION_REASONS = ("empty", "separator", "ratio")

# Generator transport
DEFAULT_BATCH_SIZE = 64
DEFAULT_WINDOW = 4
DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF = 0.5
DEFAULT_TIMEOUT = 30.0
RETRY_STATUS_CODES = [500, 502, 503, 504]

# Mixture sampling
DEFAULT_TEMPERATURE = 5.0
MIX_KEYS = ("pair", "target")

# Sweep grids
SWEEP_GAMMAS = (0.0, 0.2, 0.4, 0.6)
SWEEP_BETAS = (0.1, 0.3, 0.5, 0.7)

# Run report
REPORT_SCHEMA_VERSION = 1
REPORT_FILENAME = "run_report.json"
LEDGER_FILENAME = "checkpoints.db"

# Output layout under the run directory
OUTPUT_DIRS = {
    "candidates": "candidates",
    "training": "training",
    "hypotheses": "hypotheses",
    "multiway": "multiway",
    "mixture": "mixture",
    "stats": "stats",
}

# Exit codes
EXIT_CODES = {
    "ok": 0,
    "usage": 1,
    "data": 2,
    "transport": 3,
}

# Logging
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
LOG_DATE_FORMAT = "%H:%M:%S"

# Dashboard
UI_THEME = {
    "primary_color": "#1f77b4",
    "heatmap_scale": "Blues",
}

PAGES = {
    "overview": "📊 Overview",
    "pairs": "🔗 Language Pairs",
    "stats": "🧮 Corpus Matrix",
}
