"""resbench: robustness monotones and one-shot distillation benchmarks
for pluggable convex quantum resource theories, on a self-contained dense
conic interior-point solver."""

from .channels import ChoiMatrix, apply_choi, max_fidelity_channel, verify_free_channel
from .conic import Block, ConicProblem, ConicSolution, SolverError, solve
from .distill import (FidelityReport, GaugeDecomposition, GValue, GmeReport,
                      GoldenCertificate, build_channel, constant_overlap_check,
                      distillation_yield, exact_distillation_possible, fidelity_bounds,
                      fidelity_max_golden, g_affine, g_value, gme_values,
                      golden_certificate, golden_search, golden_state,
                      interconversion_channels, log_yield_bisect,
                      optimal_distillation_channel, pure_g_decomposition)
from .linalg import (BlockStructure, SchmidtData, blocks_from_hamiltonian, partial_trace,
                     partial_transpose, pinch, schmidt, support_projector, tensor)
from .model import Model, embed_soc, inner
from .monotones import (MonotoneResult, d_h, d_h_min_over, d_max_pair, d_min_pair,
                        r_max, r_max_affine, r_min, r_std)
from .theories import (TheoryDescriptor, asymmetry_golden_state, make_asymmetry,
                       make_bisep_ppt, make_coherence, make_ppt, make_thermal,
                       sample_free_state, theory_from_config)

__version__ = "0.1.0"
