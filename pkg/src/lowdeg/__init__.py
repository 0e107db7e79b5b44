"""Property testers for low-degree polynomials over R^n and over lattices."""

from .additivity_tester import (AdditivityConfig, AdditivityTester, approx_additivity_test,
                                mult_approx_additivity_test)
from .approx_tester import ApproxLowDegreeTester, ApproxTesterConfig, approx_low_degree_test
from .core_math import ComparisonPolicy, MultiPoly, UniPoly, alpha_coeffs, char_sum
from .discrete_tester import DiscreteLowDegreeTester, DiscreteTesterConfig, discrete_low_degree_test
from .exact_tester import ExactTesterConfig, LowDegreeTester, low_degree_test
from .harness import RunReport, run_experiment, run_theory_suite
from .oracles import (
    ConcentratedDistribution,
    FunctionOracle,
    LatticeDistribution,
    additive_plus_noise_oracle,
    far_oracle,
    gaussian_distribution,
    noisy_poly_oracle,
    poly_oracle,
    student_t_distribution,
    uniform_ball_distribution,
)
from .theory_checks import CheckReport
from .verdict import RejectSite, Verdict

__version__ = "0.1.0"

__all__ = [
    "AdditivityConfig",
    "AdditivityTester",
    "ApproxLowDegreeTester",
    "ApproxTesterConfig",
    "CheckReport",
    "ComparisonPolicy",
    "ConcentratedDistribution",
    "DiscreteLowDegreeTester",
    "DiscreteTesterConfig",
    "ExactTesterConfig",
    "FunctionOracle",
    "LatticeDistribution",
    "LowDegreeTester",
    "MultiPoly",
    "RejectSite",
    "RunReport",
    "UniPoly",
    "Verdict",
    "additive_plus_noise_oracle",
    "alpha_coeffs",
    "approx_additivity_test",
    "approx_low_degree_test",
    "char_sum",
    "discrete_low_degree_test",
    "far_oracle",
    "gaussian_distribution",
    "low_degree_test",
    "mult_approx_additivity_test",
    "noisy_poly_oracle",
    "poly_oracle",
    "run_experiment",
    "run_theory_suite",
    "student_t_distribution",
    "uniform_ball_distribution",
]
