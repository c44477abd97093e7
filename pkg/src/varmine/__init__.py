"""varmine: mining developer engagement with conditional-compilation code.

Reconstructs, for any git-hosted C/C++ preprocessor-based system, the
per-line ground truth of who touched variable vs. mandatory code,
computes degree-of-authorship and ownership expertise scores, and
quantifies workload concentration and metric accuracy.
"""

__version__ = "0.1.0"

from .variability import (  # noqa: F401
    DirectiveKind,
    GuardPolicy,
    VariabilityMap,
    build_variability_map,
    classify_line,
    extract_constants,
    project_variability_summary,
)
from .mining import (  # noqa: F401
    CommitRecord,
    DeveloperId,
    FileChange,
    LineChange,
    SourceFilter,
    extract_history,
    is_source_file,
    normalize_identity,
    snapshot_file,
)
from .attribution import (  # noqa: F401
    ContributionLedger,
    TouchRecord,
    attribute_commit,
    build_ledger,
)
from .expertise import doa, doa_scores, experts_of, ownership_scores  # noqa: F401
from .stats import (  # noqa: F401
    classify_developers,
    correlate,
    evaluate_metric,
    gini,
    lorenz,
    moments,
    ols,
    partition_by_variability,
    shapiro_wilk,
)
from .pipeline import emit_reports, run_pipeline, screen_corpus  # noqa: F401
