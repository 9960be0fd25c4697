"""Command-line pipeline: ingestion, binning, fitting, statistics, regression, plots."""
