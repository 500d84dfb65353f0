"""Online multi-horizon forecasting: input transformations followed by per-horizon LS/RLS."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    DataSet,
    ForecastMatrix,
    ResidualMatrix,
    complete_cases,
    in_range,
    load_dataset,
    residuals,
    save_dataset,
    subset,
)
from .expr import parse_expr, pretty_print  # noqa: E402
from .model import ModelSpec, ParameterBounds, ScorePeriod, load_model, save_model  # noqa: E402
from .regression import (  # noqa: E402
    FitResult,
    RlsState,
    build_design,
    load_state,
    ls_fit,
    ls_predict,
    rls_advance,
    rls_fit,
    rls_predict,
    rls_update,
    save_state,
)
from .scoring import rmse, score  # noqa: E402
from .transform import ar, bspline, eval_transform, fs, lp, multiply, one  # noqa: E402
from .tuning import objective, optimize  # noqa: E402
from .selection import step_selection  # noqa: E402
