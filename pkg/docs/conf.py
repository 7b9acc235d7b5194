"""Sphinx configuration for the mollify documentation."""

project = "mollify"
copyright = "2026, Mollify Developers"  # pylint: disable=W0622
author = "Mollify Developers"

extensions = [
    "myst_parser",
]
source_suffix = [".md"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

html_theme = "sphinx_rtd_theme"
