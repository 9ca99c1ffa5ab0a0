"""Probability-guaranteed approximate maximum inner product search.

High-dimensional points are projected to a low dimension with Gaussian
random projections; chi-square-backed stopping rules bound how far a scan
in the projected space must go before a c-approximate answer is held with
probability at least p. Search runs over a partitioned distance-key index
with page-counted storage, either incrementally (variant i) or within a
probe-determined range plus a compensation annulus (variant ii).
"""

from .chi2 import chi_square_cdf, chi_square_inv_cdf
from .codegroups import (
    BinaryCodeGroup,
    CodeGroups,
    binary_code,
    build_code_groups,
    group_lower_bound,
    quick_probe,
)
from .conditions import QueryContext, condition_a, condition_b, extended_radius, test_a
from .core import (
    ContractViolationError,
    Dataset,
    FormatError,
    NormTable,
    build_norm_table,
    inner_product,
    l2_distance,
)
from .datafiles import ingest, read_csv_vectors, read_fvecs, write_csv_vectors, write_fvecs
from .index import (
    IDistanceIndex,
    IndexConfig,
    build_index,
    compute_epsilon,
    index_key,
    kmeans,
    load_index,
    save_index,
)
from .metrics import overall_ratio, recall
from .projection import (
    ProjectedDataset,
    ProjectionMatrix,
    make_projection_matrix,
    optimized_dimension,
    project,
    project_dataset,
    project_many,
)
from .search import QueryResult, brute_force_mip, make_query_context, mip_search_i, mip_search_ii
from .storage import PageStore, PageTally

__version__ = "0.1.0"

__all__ = [
    "BinaryCodeGroup",
    "CodeGroups",
    "ContractViolationError",
    "Dataset",
    "FormatError",
    "IDistanceIndex",
    "IndexConfig",
    "NormTable",
    "PageStore",
    "PageTally",
    "ProjectedDataset",
    "ProjectionMatrix",
    "QueryContext",
    "QueryResult",
    "binary_code",
    "brute_force_mip",
    "build_code_groups",
    "build_index",
    "build_norm_table",
    "chi_square_cdf",
    "chi_square_inv_cdf",
    "compute_epsilon",
    "condition_a",
    "condition_b",
    "extended_radius",
    "group_lower_bound",
    "index_key",
    "ingest",
    "inner_product",
    "kmeans",
    "l2_distance",
    "load_index",
    "make_projection_matrix",
    "make_query_context",
    "mip_search_i",
    "mip_search_ii",
    "optimized_dimension",
    "overall_ratio",
    "project",
    "project_dataset",
    "project_many",
    "quick_probe",
    "read_csv_vectors",
    "read_fvecs",
    "recall",
    "save_index",
    "test_a",
    "write_csv_vectors",
    "write_fvecs",
]
