"""Iterative evidence-filtering RAG engine."""

from ._fairrag import (
    ConfigError,
    Engine,
    Error,
    GatewayError,
    Index,
    IndexError,
    ParseError,
    ValidationError,
    blended_rate,
    chunk_document,
    cost_per_query,
    count_tokens,
    dynamic_rate,
    f1,
    failure_histogram,
    ingest,
    parse_answer,
    parse_filter,
    parse_judge,
    parse_query_list,
    parse_sea,
    parse_validation,
    predict_latency,
    recover_model_time,
    report,
    rrf_fuse,
)

__all__ = [name for name in dir() if not name.startswith("_")]
