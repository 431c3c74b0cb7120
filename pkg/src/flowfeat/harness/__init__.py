from .experiment import (
    AuditEntry,
    AuditReport,
    CellResult,
    Partition,
    Rankings,
    SweepResult,
    audit_hidden_labels,
    partitions,
    remove_and_rerun,
    run_rankings,
    sweep_subsets,
)
from .plan import ExperimentPlan, load_plan, plan_from_mapping
from .report import emit_report, write_manifest, write_rankings
from .synthetic import SyntheticSpec, generate_synthetic, write_csv

__all__ = [
    "AuditEntry",
    "AuditReport",
    "CellResult",
    "ExperimentPlan",
    "Partition",
    "Rankings",
    "SweepResult",
    "SyntheticSpec",
    "audit_hidden_labels",
    "emit_report",
    "generate_synthetic",
    "load_plan",
    "partitions",
    "plan_from_mapping",
    "remove_and_rerun",
    "run_rankings",
    "sweep_subsets",
    "write_csv",
    "write_manifest",
    "write_rankings",
]
