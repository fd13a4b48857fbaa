# -*- coding: utf-8 -*-
#
# kscontrol documentation build configuration file
#
# Only the settings that differ from the sphinx-quickstart defaults are kept.

import sys, os

# the example scripts are imported by the plot directives
sys.path.insert(0, os.path.abspath('.'))
sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.mathjax',
              'sphinx.ext.autodoc',
              'sphinx.ext.viewcode',
              'matplotlib.sphinxext.plot_directive' # for embedded plots
             ]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'kscontrol'
copyright = u'kscontrol contributors'

version = '0.2'
release = '0.2.0'

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# the trainings behind some figures are long: plots are produced from
# the cached results written by the example scripts
plot_include_source = True
plot_html_show_formats = False

html_theme = 'default'
html_static_path = ['_static']
html_last_updated_fmt = '%b %d, %Y'
htmlhelp_basename = 'kscontroldoc'

latex_documents = [
  ('index', 'kscontrol.tex', u'kscontrol Documentation',
   u'kscontrol contributors', 'manual'),
]

man_pages = [
    ('index', 'kscontrol', u'kscontrol Documentation',
     [u'kscontrol contributors'], 1)
]
