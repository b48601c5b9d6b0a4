"""Calibration and shortcut auditing toolkit for text classifiers.

Detects shortcut-cued predictions by intersecting integrated-gradients
attributions with label-conditional token association heads, measures
expected calibration error, and reports the shortcut/performance trade-off.
"""

__version__ = "0.1.0"

from .attribution import (
    AttributionResult,
    attribute_sample,
    integrated_gradients,
    token_importance,
    top_k_tokens,
)
from .calibration import (
    BinStats,
    PredictionRecord,
    bin_records,
    ece,
    make_record,
    shortcut_distribution,
    write_reliability_csv,
)
from .corpus import Corpus, DataError, Sample, load_corpus, split, tokenize
from .lmi import LmiEntry, LmiTable, compute_lmi, head
from .metrics import TradeoffSummary, f1, shortcut_rate, shortcut_tradeoff, summarize
from .model import (
    ClassifierParams,
    EmbeddingMatrix,
    TextClassifier,
    TrainConfig,
    TrainResult,
    forward,
    grad_wrt_embeddings,
    load_checkpoint,
    logits,
    save_checkpoint,
    train,
)
from .report import (
    AuditConfig,
    AuditReport,
    ReportDelta,
    assemble,
    audit_records,
    diff,
    import_external,
    load_report,
    mean_over_reports,
    save_report,
    write_summary_csv,
)
from .shortcut import (
    CueLexicon,
    ShortcutVerdict,
    attach_verdicts,
    categorize,
    default_cue_lexicon,
    detect,
    load_stopwords,
)
from .synth import PlantSpec, generate, load_plant_spec, synth_predictions
