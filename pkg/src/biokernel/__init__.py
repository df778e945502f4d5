"""Correlation kernels of derivative-type biorthogonal ensembles by double contour quadrature."""
from .errors import BiokernelError, ConfigError
from .kernels import (ContourPlan, EnsembleSpec, KernelValue, Source, default_contour_plan,
                      kernel_eval, kernel_fully_confluent, multiplicative_kernel_eval,
                      partition_confluent, partition_function, plue_kernel_eval, mb_kernel_eval)
from .limits import bessel_oracle, mb_limit_eval, pbessel_eval
from .quadrature import QuadratureSettings
from .wcatalog import GammaLUEstar, Gaussian, PolyaProduct, RationalLUE

__all__ = [
    "BiokernelError", "ConfigError", "ContourPlan", "EnsembleSpec", "KernelValue", "Source",
    "default_contour_plan", "kernel_eval", "kernel_fully_confluent", "multiplicative_kernel_eval",
    "partition_confluent", "partition_function", "plue_kernel_eval", "mb_kernel_eval",
    "bessel_oracle", "mb_limit_eval", "pbessel_eval", "QuadratureSettings", "GammaLUEstar",
    "Gaussian", "PolyaProduct", "RationalLUE",
]
