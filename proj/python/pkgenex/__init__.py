from ._pkgenex import (
    CoexpressionGraph,
    EvalReport,
    GeneEmbeddings,
    bh_adjust,
    build_graph,
    factorize_graph,
    generate_dataset,
    lambda_sweep,
    np_score,
    per_gene_pearson,
    run_experiment,
)

__all__ = [
    "CoexpressionGraph",
    "EvalReport",
    "GeneEmbeddings",
    "bh_adjust",
    "build_graph",
    "factorize_graph",
    "generate_dataset",
    "lambda_sweep",
    "np_score",
    "per_gene_pearson",
    "run_experiment",
]
