"""Quantify dangerous speech propagation in retweet networks.

The library covers the full pipeline: lexicon-based candidate filtering
over normalized tweet text, dual-annotation resolution with agreement
scoring, belief diffusion over the retweet graph, natural-breaks danger
categories, audience polarity, and a statistical battery over user
attributes.  The ``incite`` command line runs the same stages over files.
"""

__version__ = "0.1.0"

from .annotate import (
    AnnotationPair,
    cohens_kappa,
    danger_counts,
    dangerous_users,
    parse_annotations,
    resolve_label,
)
from .corpus import (
    CAA_NRC,
    COVID19,
    FARMERS,
    EventLabel,
    LexiconSet,
    Tweet,
    UserProfile,
    classify_event,
    cosine_similarity,
    expand_seed_keywords,
    filter_candidates,
    load_lexicons,
    normalize_text,
    parse_tweets,
    parse_users,
    term_frequency_ratio,
)
from .diffusion import (
    DabResult,
    assign_dac,
    average_dab,
    compute_dab,
    degroot_step,
    ecdf,
    jenks_breaks,
)
from .errors import ConfigError, DataError, InciteError, NumericError
from .graph import (
    RetweetGraph,
    adjacency,
    build_retweet_graph,
    eigenvector_centrality,
    export_dot,
    export_gexf,
    harmonic_closeness,
    indegree_centrality,
    transition,
)
from .polarity import (
    PartyFollowing,
    follower_polarity,
    parse_stances,
    retweet_polarity,
)
from .stats import (
    AnovaResult,
    GroupSummary,
    PairwiseDifference,
    RegressionResult,
    group_summary,
    linreg,
    one_way_anova,
    tukey_hsd,
)

__all__ = [
    "AnnotationPair",
    "AnovaResult",
    "CAA_NRC",
    "COVID19",
    "ConfigError",
    "DabResult",
    "DataError",
    "EventLabel",
    "FARMERS",
    "GroupSummary",
    "InciteError",
    "LexiconSet",
    "NumericError",
    "PairwiseDifference",
    "PartyFollowing",
    "RegressionResult",
    "RetweetGraph",
    "Tweet",
    "UserProfile",
    "adjacency",
    "assign_dac",
    "average_dab",
    "build_retweet_graph",
    "classify_event",
    "cohens_kappa",
    "compute_dab",
    "cosine_similarity",
    "danger_counts",
    "dangerous_users",
    "degroot_step",
    "ecdf",
    "eigenvector_centrality",
    "expand_seed_keywords",
    "export_dot",
    "export_gexf",
    "filter_candidates",
    "follower_polarity",
    "group_summary",
    "harmonic_closeness",
    "indegree_centrality",
    "jenks_breaks",
    "linreg",
    "load_lexicons",
    "normalize_text",
    "one_way_anova",
    "parse_annotations",
    "parse_stances",
    "parse_tweets",
    "parse_users",
    "resolve_label",
    "retweet_polarity",
    "term_frequency_ratio",
    "transition",
    "tukey_hsd",
]
