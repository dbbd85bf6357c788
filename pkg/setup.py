#!/usr/bin/env python
# -*- coding: utf-8 -*-
try:
    from setuptools import setup
except ImportError:
    from ez_setup import use_setuptools
    use_setuptools()
    from setuptools import setup

VERSION = '0.1-dev'

if __name__ == '__main__':
    setup(
        name = 'srmvariation',
        version = VERSION,
        description = "Horizontal geometry and perimeter variations of hypersurfaces in vertically rigid sub-Riemannian manifolds.",
        long_description = open('README.rst', 'r').read(),
        keywords = "sub-Riemannian Heisenberg rototranslation perimeter second variation stability CMC",
        license = 'BSD',
        packages = (
            'srmvariation',
            'srmvariation.tests',
        ),
        classifiers = (
            'Development Status :: 3 - Alpha',
            'Environment :: Console',
            'Intended Audience :: Science/Research',
            'License :: OSI Approved :: BSD License',
            'Operating System :: OS Independent',
            'Programming Language :: Python :: 3',
            'Topic :: Scientific/Engineering :: Mathematics'
        ),
        zip_safe = False,
        python_requires = '>=3.7',
        install_requires = (
            'numpy>=1.17',
            'scipy>=1.4',
            'sympy>=1.5',
        ),
        entry_points = {
            'console_scripts': (
                'srmvariation = srmvariation.cli:main',
            ),
        },
    )
