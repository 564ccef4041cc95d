"""Weighted random sampling: alias tables, output-sensitive sampling with
and without replacement, permutations, subset and reservoir sampling."""
from .alias import AliasTable, build_psa, build_sweep, build_vose, sample, sample_many
from .compressed import CompressedTable, build_compressed, sample_compressed, sample_compressed_many
from .core import DEFAULT_SEED, RngStream, SampleWithMultiplicity, WeightTable, default_seed
from .noreplace import choose_ell, sample_no_replacement
from .outsens import GroupedSampler, build_grouped, sample_replacement
from .permute import weighted_permutation
from .reservoir import Reservoir, stream_reservoir
from .subset import SubsetSampler, build_subset, sample_subset
from .twolevel import TwoLevelTable, build_two_level, sample_two_level, sample_two_level_many

__all__ = [
    "AliasTable", "CompressedTable", "DEFAULT_SEED", "GroupedSampler", "Reservoir", "RngStream",
    "SampleWithMultiplicity", "SubsetSampler", "TwoLevelTable", "WeightTable", "build_compressed",
    "build_grouped", "build_psa", "build_subset", "build_sweep", "build_two_level", "build_vose",
    "choose_ell", "default_seed", "sample", "sample_compressed", "sample_compressed_many", "sample_many",
    "sample_no_replacement", "sample_replacement", "sample_subset", "sample_two_level",
    "sample_two_level_many", "stream_reservoir", "weighted_permutation",
]
