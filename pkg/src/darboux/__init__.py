from darboux.seed import seed_candidates, seed_hamiltonian
from darboux.flow_box import FlowBoxChart, flow_box
from darboux.family import (
    CommutingFamily,
    CoordinateField,
    FamilyLevel,
    TransversalPullback,
    certify_family,
    extend_commuting_family,
    seed_family,
    transversal_form,
)
from darboux.chart import DarbouxChart, darboux_chart
