"""Weighted compositional functional data analysis of life-table death counts."""

from ._kernels import BACKEND
from .annuity import (
    AnnuityQuote,
    annuity_table,
    bond_price,
    price_annuity,
    price_annuity_interval,
    survival_probabilities,
)
from .clr import ClrDecomposition, clr_forward, clr_inverse
from .errors import DomainError, ParseError, StructuralError, WcodaError
from .evaluation import (
    BacktestPlan,
    ErrorReport,
    MethodConfig,
    ecp_cpd,
    expanding_window_backtest,
    jsd,
    kld,
    select_kappa,
)
from .fixtures import load_fixture
from .forecast import ForecastSet, ScoreForecast, forecast_death_counts, rwd_forecast
from .lifetable import (
    LifeTableSeries,
    MortalityInputs,
    derive_death_counts,
    gini_coefficient,
    life_expectancy_at_birth,
    load_series,
    parse_life_table,
)
from .uncertainty import (
    BootstrapEnsemble,
    PredictionBand,
    bootstrap_paths,
    prediction_band,
    score_forecast_errors,
)
from .weighting import WeightScheme, kappa_grid, make_weights
from .wfpca import FpcaModel, fit_wfpca, select_k_evr

__version__ = "0.1.0"
