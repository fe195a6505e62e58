from foliation.homotopy import HomotopyPrimitive, homotopy_primitive, primitive_residual
from foliation.section import (
    AdaptedChart,
    AffineSection,
    BaseBox,
    FlowedSection,
    Section,
    build_section,
    initial_base_box,
)
from foliation.canonical import (
    CanonicalChart,
    SectionShift,
    canonical_coordinates,
    darboux_residual,
    lagrangian_report,
    lagrangianize_section,
    obstruction_form,
)
