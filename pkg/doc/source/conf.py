# -*- coding: utf-8 -*-
#
# django-rydberg-qudits documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import os
import sys

# autodoc imports the package, which needs configured settings
sys.path.insert(0, os.path.abspath('../..'))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rydqudit.tests.settings')

import django  # noqa:E402
django.setup()

# -- General configuration -----------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.todo',
    'sphinx.ext.coverage',
    'sphinx.ext.viewcode',
    'sphinx.ext.mathjax',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'django-rydberg-qudits'
copyright = u'2021, Chris Malek'

# The short X.Y version.
version = '0.1.0'
# The full version, including alpha/beta/rc tags.
release = '0.1.0'

language = None
exclude_patterns = []
pygments_style = 'sphinx'

autodoc_member_order = 'bysource'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'django-rydberg-quditsdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {
}

latex_documents = [
    ('index', 'django-rydberg-qudits.tex', u'django-rydberg-qudits Documentation', u'Chris Malek', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'django-rydberg-qudits', u'django-rydberg-qudits Documentation', [u'Chris Malek'], 1)
]

# -- Options for Texinfo output ------------------------------------------------

texinfo_documents = [
    ('index', 'django-rydberg-qudits', u'django-rydberg-qudits Documentation', u'Chris Malek',
     'django-rydberg-qudits', 'Pulses, CZ compilation and noise benchmarks for Rydberg-atom qudits.',
     'Miscellaneous'),
]
