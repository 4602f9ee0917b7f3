# -*- coding: utf-8 -*-
#
# SCA-Graph documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))


# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'SCA-Graph'
copyright = u'2026, the SCA-Graph authors'
author = u'The SCA-Graph authors'

# The short X.Y version and the full version, including alpha/beta/rc tags.
from scagraph import __version__ as v
version = v.rsplit('.', v.count('.') - 1)[0]
release = v

language = 'en'

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = 'sphinx'

todo_include_todos = False

# -- Doctest ----------------------------------------------------------------

import doctest
doctest_default_flags = (doctest.NORMALIZE_WHITESPACE |
                         doctest.ELLIPSIS |
                         doctest.IGNORE_EXCEPTION_DETAIL |
                         doctest.DONT_ACCEPT_TRUE_FOR_1)

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

htmlhelp_basename = 'SCA-Graphdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'sca', u'SCA-Graph Documentation',
     [author], 1)
]

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'networkx': ('https://networkx.org/documentation/stable/',
                                    None)}
