"""BI3 and IBI3: kNN-based measures of how much class imbalance hurts a binary dataset."""
from bi3.dataset import ClassStats, Column, Dataset, FeatureSchema, canonicalize, load_file, parse_csv, parse_keel
from bi3.errors import (Bi3Error, ParseError, PreconditionError, UndefinedCorrelationError,
                        UnsupportedInstanceError)
from bi3.kernels import BACKEND
from bi3.measures import (GaussianClassModel, MeasureReport, PosteriorScores, bi3, bi3_value, cl, cm,
                          gaussian_ibi3, ibi3, ibi3_from_counts, kdn)
from bi3.neighbors import MetricConfig, Neighborhood, distance, flexible_neighborhood, knn

__version__ = "0.1.0"
