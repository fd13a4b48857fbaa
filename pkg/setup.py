from setuptools import setup
from setuptools.extension import Extension

from Cython.Distutils import build_ext
import numpy as np

setup(

    name = "kscontrol",
    version = '0.2.0',
    packages = ['kscontrol', 'kscontrol.fourier_core', 'kscontrol.tests'],

    cmdclass = {'build_ext': build_ext},
    ext_modules = [

        Extension(
            'kscontrol.fourier_core.interleaved_cython',
            ['kscontrol/fourier_core/interleaved_cython.pyx'],
            extra_compile_args=['-O3']
        ),

    ],
    include_dirs = [np.get_include()], #find numpy headers to build the Cython extension

    python_requires = '>=3.7',
    install_requires = ["numpy", "scipy", "cython", "torch"],

    extras_require = {
            'plots':  ["matplotlib"],
            'test':   ["pytest"],
    },

    entry_points = {
        'console_scripts': ['kscontrol = kscontrol.cli:main'],
    },

    author = "kscontrol contributors",

    description = 'control of the Kuramoto-Sivashinsky equation: DDPG with symmetry reduction, '
                  'equilibria continuation and LQR',

    license = 'BSD-3',

    classifiers=[
    'Development Status :: 4 - Beta',

    'Intended Audience :: Science/Research',
    'Topic :: Scientific/Engineering :: Physics',

     'License :: OSI Approved :: BSD License',

    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3.7',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
],

)
