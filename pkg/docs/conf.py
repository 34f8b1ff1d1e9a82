# -*- coding: utf-8 -*-
#
# qcis documentation build configuration file.
import os
import sys

# make `src.qcis` importable for autodoc
sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc']
autodoc_member_order = 'bysource'
autodoc_default_options = {'members': True, 'undoc-members': False}

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'qcis'
version = '0.1'
release = '0.1'

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'qcisdoc'
