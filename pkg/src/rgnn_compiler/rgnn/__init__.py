"""Assembly and simulation of recurrent sum-GNNs."""

from rgnn_compiler.rgnn.assembler import AssembledRgnn, Rgnn, assemble_rgnn, machine_port
from rgnn_compiler.rgnn.runner import (
    AuditReport,
    GrowthFit,
    RgnnRun,
    RniRun,
    RunStats,
    audit_run,
    growth_sweep,
    run_graph_embedding,
    run_rgnn,
    run_rgnn_global,
    run_rgnn_rni,
    simulate,
)

__all__ = [
    "AssembledRgnn",
    "AuditReport",
    "GrowthFit",
    "Rgnn",
    "RgnnRun",
    "RniRun",
    "RunStats",
    "assemble_rgnn",
    "audit_run",
    "growth_sweep",
    "machine_port",
    "run_graph_embedding",
    "run_rgnn",
    "run_rgnn_global",
    "run_rgnn_rni",
    "simulate",
]
