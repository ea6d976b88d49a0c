"""Uniform and near-uniform sampling of simple graphs with power-law degree sequences."""

from .degree_model import DegreeSequence, derive_params, load_and_validate, moments
from .pairing import Rng
from .sampler import RunStats, Sampler, sample, sample_batch

__all__ = ["DegreeSequence", "Rng", "RunStats", "Sampler", "derive_params", "load_and_validate",
           "moments", "sample", "sample_batch"]
