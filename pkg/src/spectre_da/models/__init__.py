from .mixture import MixtureModel, MixtureTheta, mixture_kmeans_start, simulate_mixture_data
from .psw import PswModel, fit_logistic_mle
from .toy import ToyModel, toy_exact_log_kernel

__all__ = [
    "MixtureModel",
    "MixtureTheta",
    "PswModel",
    "ToyModel",
    "fit_logistic_mle",
    "mixture_kmeans_start",
    "simulate_mixture_data",
    "toy_exact_log_kernel",
]
