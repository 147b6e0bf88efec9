# Answer span delimiters inserted before translation
DEFAULT_START_DELIMITER = "<answer_start>"
DEFAULT_END_DELIMITER = "<answer_end>"

# Backend defaults
DEFAULT_BATCH_SIZE = 32  # Segments per request
DEFAULT_MAX_IN_FLIGHT = 4  # Concurrent batches per backend
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_BACKOFF_BASE = 1.0  # seconds, doubled on each retry
DEFAULT_TIMEOUT = 60.0  # seconds per request
DEFAULT_SOURCE_LANG = "en"
DEFAULT_TARGET_LANG = "pt"
TRANSLATE_PATH = "/translate"
API_KEY_ENV = "TRANSLATION_API_KEY"
RETRY_STATUS_CODES = (500, 502, 503, 504)
RATE_LIMIT_STATUS_CODE = 429

# Mock backends, addressed as mock:<kind>[:param[:param]]
MOCK_PREFIX = "mock:"
MOCK_KINDS = ("identity", "reverse-words", "dictionary-swap", "delimiter-dropper")

# QA context translation modes
QA_MODES = ("per-sentence", "whole-context")
DEFAULT_QA_MODE = "per-sentence"

# NLI schema descriptors
NLI_SCHEMAS = {
    "mnli": {
        "layout": "tsv",
        "columns": ["id", "premise", "hypothesis", "label"],
        "header": True,
        "labels": ["entailment", "neutral", "contradiction"],
        "label_aliases": {},
    },
    "assin2": {
        "layout": "tsv",
        "columns": ["id", "premise", "hypothesis", "label"],
        "header": True,
        "labels": ["entailment", "none"],
        "label_aliases": {"Entailment": "entailment", "None": "none"},
    },
    "plain": {
        "layout": "tsv",
        "columns": ["premise", "hypothesis", "label"],
        "header": False,
        "labels": ["entailment", "neutral", "contradiction"],
        "label_aliases": {},
    },
}

# MNLI -> two-class scheme used when mixing MNLI with ASSIN2
CONTRADICTION_TO_NEUTRAL = {
    "entailment": "entailment",
    "neutral": "neutral",
    "contradiction": "neutral",
}

# Articles removed before EM/F1, per language
ARTICLES = {
    "en": ("a", "an", "the"),
    "pt": ("o", "a", "os", "as", "um", "uma", "uns", "umas"),
}

# Ranking
DEFAULT_TOP_K = 1000  # Passages per query translated by strategy 2
DEFAULT_MRR_CUTOFF = 10
