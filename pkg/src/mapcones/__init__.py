"""Cone membership of linear maps on M_n and of their one-parameter semigroups."""

from mapcones.cones import (
    MEMBER,
    NO_WITNESS,
    NOT_MEMBER,
    ConeVerdict,
    dual_pairing,
    is_cp,
    is_eb,
    is_k_positive_witnessed,
    is_ppt,
    kraus_rank_bound,
)
from mapcones.errors import (
    DimensionError,
    MapconesError,
    NotCompletelyPositiveError,
    NotHermitianError,
    NotIdempotentError,
    PreconditionError,
    SchemaError,
    UnsupportedError,
    UnsupportedIdempotentError,
)
from mapcones.family4 import EntryTimeResult, FamilyParams, entry_time, evolve_family
from mapcones.generators import DMatrix, GKSLData, IdempotentPair, build_gksl, gksl_decompose
from mapcones.numerics import BACKEND
from mapcones.superop import OrthonormalBasis, SuperOp, standard_map

__version__ = "0.1.0"
