#!/usr/bin/env python
#
# guardband documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

import guardband

# -- General configuration ---------------------------------------------

extensions = ["sphinx.ext.autodoc", "sphinx.ext.viewcode"]
templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

# General information about the project.
project = "guardband"
copyright = "2026, guardband developers"
author = "guardband developers"

# The short X.Y version.
version = guardband.__version__
# The full version, including alpha/beta/rc tags.
release = guardband.__version__

language = "en"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
pygments_style = "sphinx"
todo_include_todos = False

# -- Options for HTML output -------------------------------------------

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "guardbanddoc"

# -- Options for LaTeX, manual page and Texinfo output ------------------

latex_documents = [
    (master_doc, "guardband.tex", "guardband Documentation", author, "manual"),
]
man_pages = [(master_doc, "guardband", "guardband Documentation", [author], 1)]
texinfo_documents = [
    (
        master_doc,
        "guardband",
        "guardband Documentation",
        author,
        "guardband",
        "Blocking and dropping analysis of guard-band call admission control.",
        "Miscellaneous",
    ),
]
