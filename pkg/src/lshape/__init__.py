"""Uniformity norms, configuration counting and density increments on
pair spaces over small prime moduli.

The pattern of interest is the four-point configuration

    (x, y), (x, y + z), (x, y + 2z), (x + z, y)

inside Z_p^n x Z_p^n.  The package provides character sums and the
inverse second-order argument (``spectral``), the full uniformity norm
hierarchy with slot norms adapted to the configuration (``norms``),
exact counting and obstruction constructions (``patterns``), complexity
certificates for linear form systems (``linforms``), fibered structured
sets (``structured``) and the partition energy / density increment
machinery (``increment``).  ``lshape`` on the command line fronts all
of it with deterministic JSON reports.
"""

from .field import (
    AffineSubspace,
    GroupVector,
    PrimeField,
    ResourceLimitError,
    full_space,
    intersect_subspaces,
    modular_rref,
    solve_mod,
    subspace_from_normals,
)
from .tables import (
    FunctionTable,
    IndicatorSet,
    load_any,
    load_set,
    load_table,
    product_lift,
    save_set,
    save_table,
)
from .spectral import (
    dft,
    dft_reference,
    idft,
    inverse_u2,
    parseval_report,
    subspace_average_bound_check,
    u2_fourth,
)
from .norms import (
    NormValue,
    box_norm,
    delta,
    directional_average,
    gcs_check,
    gowers_norm,
    slot_norm,
)
from .patterns import (
    ObstructionExample,
    PatternCount,
    corner_average,
    count_system,
    lshape_average,
    obstruction_example,
    telescope_check,
)
from .linforms import (
    ComplexityCertificate,
    LinearFormSystem,
    ap_system,
    corner_point_system,
    corner_slot_system,
    cs_complexity,
    lshape_point_system,
    lshape_slot_system,
    row_uniformity_proportion,
    system_average,
    uniformity_count_check,
    verify_certificate,
    von_neumann_check,
)
from .structured import (
    FiberFamily,
    MixedFiberFamily,
    StructuredProductSet,
    approx_poly_proportion,
    base_uniformity_transfer_check,
    face_derivative_statistic,
    fiber_levels,
    fiber_stats,
    intersection_codim_statistic,
    load_fibers,
    random_family,
    save_fibers,
)
from .increment import (
    Cell,
    ProductCosetPartition,
    align_offset_increment,
    energy_monotone_check,
    fiber_mean_increment,
    increment_driver,
    partition_energy,
    planted_row_instance,
    planted_skew_instance,
    pseudorandomize_u2,
    refine_on_character,
    search_extremal_L_free,
    skew_line_increment,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSubspace",
    "GroupVector",
    "PrimeField",
    "ResourceLimitError",
    "full_space",
    "intersect_subspaces",
    "modular_rref",
    "solve_mod",
    "subspace_from_normals",
    "FunctionTable",
    "IndicatorSet",
    "load_any",
    "load_set",
    "load_table",
    "product_lift",
    "save_set",
    "save_table",
    "dft",
    "dft_reference",
    "idft",
    "inverse_u2",
    "parseval_report",
    "subspace_average_bound_check",
    "u2_fourth",
    "NormValue",
    "box_norm",
    "delta",
    "directional_average",
    "gcs_check",
    "gowers_norm",
    "slot_norm",
    "ObstructionExample",
    "PatternCount",
    "corner_average",
    "count_system",
    "lshape_average",
    "obstruction_example",
    "telescope_check",
    "ComplexityCertificate",
    "LinearFormSystem",
    "ap_system",
    "corner_point_system",
    "corner_slot_system",
    "cs_complexity",
    "lshape_point_system",
    "lshape_slot_system",
    "row_uniformity_proportion",
    "system_average",
    "uniformity_count_check",
    "verify_certificate",
    "von_neumann_check",
    "FiberFamily",
    "MixedFiberFamily",
    "StructuredProductSet",
    "approx_poly_proportion",
    "base_uniformity_transfer_check",
    "face_derivative_statistic",
    "fiber_levels",
    "fiber_stats",
    "intersection_codim_statistic",
    "load_fibers",
    "random_family",
    "save_fibers",
    "Cell",
    "ProductCosetPartition",
    "align_offset_increment",
    "energy_monotone_check",
    "fiber_mean_increment",
    "increment_driver",
    "partition_energy",
    "planted_row_instance",
    "planted_skew_instance",
    "pseudorandomize_u2",
    "refine_on_character",
    "search_extremal_L_free",
    "skew_line_increment",
    "__version__",
]
