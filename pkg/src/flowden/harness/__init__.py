from .config import DataConfig, Dataset, EvalConfig, GridSpec, RunConfig, output_root
from .grid import delta_psnr_rows, evaluate_run, run_cell, run_grid
from .report import emit_report, read_results_csv, write_results_csv
from .train import TrainResult, denoiser_fn, load_run, network_fn, train

__all__ = [
    "DataConfig",
    "Dataset",
    "EvalConfig",
    "GridSpec",
    "RunConfig",
    "output_root",
    "train",
    "TrainResult",
    "load_run",
    "network_fn",
    "denoiser_fn",
    "evaluate_run",
    "run_cell",
    "run_grid",
    "delta_psnr_rows",
    "emit_report",
    "read_results_csv",
    "write_results_csv",
]
