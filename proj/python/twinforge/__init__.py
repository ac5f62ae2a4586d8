from ._twinforge import (
    ConfigError,
    QueryError,
    SimulationFault,
    TelemetryError,
    ackermann_angles,
    batches,
    condition,
    default_matrix,
    evaluate_csv,
    format_rate,
    lidar_flat_ground,
    parse_case_id,
    run_case,
    stable_hash,
    suspension_coefficients,
    transmission_map_rpm,
)

__all__ = [
    "ConfigError",
    "QueryError",
    "SimulationFault",
    "TelemetryError",
    "ackermann_angles",
    "batches",
    "condition",
    "default_matrix",
    "evaluate_csv",
    "format_rate",
    "lidar_flat_ground",
    "parse_case_id",
    "run_case",
    "stable_hash",
    "suspension_coefficients",
    "transmission_map_rpm",
]
