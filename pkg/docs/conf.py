# Sphinx configuration for the guimigrate API documentation.
# Modules under guimigrate.impl are deliberately absent from the .rst pages.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import guimigrate  # noqa: E402

project = 'gui-test-migrator'
author = 'gui-test-migrator authors'
copyright = '2024, ' + author
version = release = guimigrate.__version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx_autodoc_typehints',
]

master_doc = 'index'
exclude_patterns = ['build']

html_theme = 'sphinx_rtd_theme'

autodoc_member_order = 'bysource'
autodoc_default_options = {
    'undoc-members': False,
}
