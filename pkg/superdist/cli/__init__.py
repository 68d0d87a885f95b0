"""Command-line entry point for superdist experiments and demos."""
