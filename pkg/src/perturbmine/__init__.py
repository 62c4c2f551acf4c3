"""Mine human-written text perturbations by sound, retrieve them, and use
them to attack and harden text classifiers."""

from . import errors
from .attack import AttackConfig, AttackOutcome, Edit, attack, candidates, char_bugs, score_words
from .errors import (
    ChecksumMismatch,
    DegenerateData,
    EmptyAfterFold,
    EmptyGold,
    EmptyInput,
    EncodingFailure,
    FormatError,
    IoFailure,
    MalformedResponse,
    NoValidExamples,
    NotCorrectlyPredicted,
    PerturbMineError,
    ScorerFailure,
    TimeoutFailure,
    TransportFailure,
)
from .corpus import (
    TokenCounts,
    TokenRecord,
    WordView,
    contains_letter,
    ingest,
    merge,
    read_corpus,
    split_affixes,
    tokenize,
)
from .distance import levenshtein_ci
from .evaluation import (
    AttackCampaignResult,
    GridCell,
    atk_rate,
    defense_grid,
    grid_to_tsv,
    precision_under_perturbation,
    run_campaign,
    wild_coverage,
)
from .index import PerturbationIndex
from .models import (
    LabeledDataset,
    NaiveBayesTextScorer,
    RemoteScorer,
    SoundInvariantScorer,
    augment_adversarial,
    load_scorer,
    serve_scorer,
)
from .normalize import (
    NormalizerStack,
    NormalizingScorer,
    correct_spelling,
    load_dictionary,
    normalize_accents,
    normalize_homoglyphs,
)
from .phonetic import (
    DEFAULT_FOLD_TABLE,
    PhoneticCode,
    encode,
    encode_levels,
    fold_visual,
    load_fold_table,
)

__version__ = "0.1.0"
