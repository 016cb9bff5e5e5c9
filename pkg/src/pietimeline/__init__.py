"""Personal-important-event timelines from user document streams.

The package fits a four-level Dirichlet process mixture to timestamped
per-user documents, labels every document as public/personal and
time-general/time-specific, and turns each user's personal time-specific
documents into a chronological event timeline.
"""

from .baselines import (
    LdaConfig,
    fit_multilevel_lda,
    fit_person_dp,
    fit_public_dp,
    timeline_view,
)
from .corpus import (
    Corpus,
    Document,
    DocumentRecord,
    IngestConfig,
    Vocabulary,
    assign_epochs,
    build_vocabulary,
    corpus_from_records,
    fingerprint,
    ingest,
    read_records,
    restrict_to_user,
    to_records,
    write_records,
)
from .dpm import (
    NEW_TOPIC,
    Hyperparams,
    PosteriorSummary,
    SamplerState,
    Schedule,
    doc_loglik,
    gibbs_sweep,
    init_state,
    load_checkpoint,
    load_summary,
    log_joint,
    run_chain,
    sample_labels,
    sample_topic,
    save_checkpoint,
    save_summary,
    type_proportions,
)
from .errors import DataError, NumericalError
from .evaluate import (
    GoldTimeline,
    adjusted_rand_index,
    evaluate_run,
    event_recall,
    gold_from_events,
    match_topics,
    read_gold_timeline,
    render_report,
    tweet_prf,
    write_report,
)
from .synth import (
    GenConfig,
    GroundTruth,
    generate,
    gold_lines,
    read_ground_truth,
    separable_preset,
    write_ground_truth,
)
from .timeline import (
    Timeline,
    TimelineEntry,
    build_timeline,
    celebrity_topic_filter,
    chi2_shape_pvalue,
    clustering_balance,
    merge_topics,
    singleton_clusters,
    write_timeline,
)

__version__ = "0.1.0"
