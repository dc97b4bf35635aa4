"""Chain orchestration, baselines, experiments, diagnostics and the command line."""
