"""Command-line harness for the conformal energy toolkit."""
