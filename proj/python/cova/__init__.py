"""Price, title and image extraction from rendered pages with visual context."""

from ._core import (
    CovaError,
    ValidationError,
    ShapeError,
    SchemaError,
    ConfigError,
    SpecError,
    UnknownElementError,
    EmptyNeighborhoodError,
    Model,
    Webpage,
    attention_scores,
    build_graph,
    evaluate,
    load_dataset,
    make_folds,
    parse_page,
    predict_page,
    render_attention,
    softmax,
    synth_generate,
    synth_page,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
