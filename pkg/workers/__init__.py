"""Worker packages."""
