"""Command-line and suite runners for qcat."""
