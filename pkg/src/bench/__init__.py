from .bench_runner import run_suite, solve_file, write_table

__all__ = ["run_suite", "solve_file", "write_table"]
