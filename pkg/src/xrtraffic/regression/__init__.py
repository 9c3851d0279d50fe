from .dataset import METHODS, PredictorConfig, build_dataset, n_rows, prediction_times
from .model import (
    SCOPES,
    PredictorModel,
    denormalize_theta,
    fit_model,
    normalize,
    read_model,
    split_holdout,
    write_model,
)
from .residuals import (
    ResidualSeries,
    relative_residuals,
    residual_acf,
    residual_ccdf,
    residual_std_grid,
    residuals,
)
from .scopes import fit_scoped, model_for
from .solvers import (
    RankDeficiencyWarning,
    fit_huber,
    fit_ols,
    fit_quantile,
    huber_loss,
    pinball_loss,
)

__all__ = [
    "METHODS", "SCOPES", "PredictorConfig", "PredictorModel", "ResidualSeries", "RankDeficiencyWarning",
    "build_dataset", "n_rows", "prediction_times", "denormalize_theta", "fit_model", "normalize",
    "read_model", "write_model", "split_holdout", "relative_residuals", "residual_acf", "residual_ccdf",
    "residual_std_grid", "residuals", "fit_scoped", "model_for", "fit_huber", "fit_ols", "fit_quantile",
    "huber_loss", "pinball_loss",
]
