"""Trace-centric toolkit: a traced interpreter for a small imperative
language, execution-grounded question generation, answer scoring, and the
dataset pipeline around them."""

from .errors import (
    ConfigError,
    FuelExhausted,
    InterpRuntimeError,
    LexError,
    OutputOverflow,
    ParseError,
    SourceError,
    UnsupportedConstructError,
)
from .syntax import (
    ComplexityReport,
    ConstraintReport,
    ConstraintSpec,
    SourceProgram,
    load_blacklist,
    load_program,
    measure_complexity,
    parse_constraint_file,
    parse_source,
    scan_blacklist,
    tokenize_source,
    validate_constraints,
)
from .tracing import (
    StateSnapshot,
    Trace,
    TraceStep,
    deserialize_trace,
    diff_states,
    serialize_trace,
)
from .interp import (
    DEFAULT_FUEL,
    DEFAULT_MAX_OUTPUT,
    DEFAULT_MAX_RENDER,
    ExecutionLimits,
    ExecutionResult,
    execute,
    parse_entry_call,
    parse_literal,
    render_value,
    type_name,
)
from .questions import (
    Question,
    QuestionSet,
    deserialize_questions,
    generate_questions,
    masked_driver_text,
    questions_for_call,
    render_prompt,
    sample_questions,
    serialize_questions,
)
from .rewards import (
    EpisodeAnswers,
    EpisodeScore,
    RewardConfig,
    parse_answer_block,
    reward_gen,
    reward_io,
    reward_oi,
    reward_white,
    reward_whitebox,
    score_record,
    score_stream,
    score_whitebox,
    verify_answer,
    verify_cf_answer,
    verify_df_answer,
)
from .pipeline import (
    ContaminationReport,
    DatasetInstance,
    FilterDecision,
    ValuePool,
    build_library_io_case,
    contamination_scan,
    corpus_stats,
    extract_example,
    filter_difficulty,
    filter_execution,
    load_pool,
    make_oracle,
    mutate_inputs,
    read_vectors,
    write_vectors,
)

__version__ = "0.1.0"

__all__ = [
    "SourceError", "LexError", "ParseError", "UnsupportedConstructError",
    "InterpRuntimeError", "FuelExhausted", "OutputOverflow", "ConfigError",
    "SourceProgram", "load_program", "tokenize_source", "parse_source",
    "ComplexityReport", "measure_complexity", "ConstraintSpec",
    "ConstraintReport", "parse_constraint_file", "validate_constraints",
    "load_blacklist", "scan_blacklist",
    "TraceStep", "StateSnapshot", "Trace", "diff_states",
    "serialize_trace", "deserialize_trace",
    "ExecutionLimits", "ExecutionResult", "execute", "parse_entry_call",
    "parse_literal", "render_value", "type_name",
    "DEFAULT_FUEL", "DEFAULT_MAX_OUTPUT", "DEFAULT_MAX_RENDER",
    "Question", "QuestionSet", "generate_questions", "sample_questions",
    "questions_for_call", "serialize_questions", "deserialize_questions",
    "render_prompt", "masked_driver_text",
    "EpisodeAnswers", "EpisodeScore", "RewardConfig", "parse_answer_block",
    "verify_cf_answer", "verify_df_answer", "verify_answer",
    "reward_io", "reward_white", "reward_whitebox", "reward_oi", "reward_gen",
    "score_whitebox", "score_record", "score_stream",
    "DatasetInstance", "ValuePool", "load_pool", "mutate_inputs",
    "FilterDecision", "filter_execution", "filter_difficulty", "make_oracle",
    "ContaminationReport", "contamination_scan", "read_vectors",
    "write_vectors", "corpus_stats", "extract_example",
    "build_library_io_case",
]
