"""Polar lattices, PAC lattices and their multilevel decoders."""
__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    ConvolutionProfile,
    CoordinateArray,
    LatticeSpec,
    ProfileError,
    RateProfile,
    build_generator,
    construction_d_generator,
    coordinate_array,
    encode_lattice,
    integer_from_array,
    is_lattice_point,
    lift_convolution,
    log2_volume,
    pac_generator,
    polar_transform_f2,
    scale_lattice,
    spec_from_dict,
    spec_hash,
    spec_to_dict,
)
from .channel import (  # noqa: E402
    ModTwoChannel,
    aliased_entropy,
    aliased_llr,
    estimate_reliabilities,
    partition_capacity,
    select_profile,
)
from .decoding import (  # noqa: E402
    DecoderConfig,
    multilevel_decode,
    pac_scl_decode,
    sc_decode,
    scl_decode,
)
from .analysis import (  # noqa: E402
    code_weight_enum,
    lattice_min_vectors,
    multilevel_dmin,
    nvnr,
    nvnr_decomposition,
    small_lattice_enumerate,
)
