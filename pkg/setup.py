# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import os
import sys
import subprocess
try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup
from distutils.core import Command

with open(os.path.join(os.path.dirname(__file__), 'README.md')) as f:
    readme = f.read()


class Test(Command):
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        errno = subprocess.call([sys.executable, 'testing/manage.py', 'test'])
        raise SystemExit(errno)

setup(name="shrinklasso",
      description='Restricted, preliminary-test and Stein-type shrinkage '
                  'LASSO estimators with risk and efficiency harnesses.',
      long_description=readme,
      maintainer="shrinklasso contributors",
      version="0.1.0",
      packages=["shrinklasso", "shrinklasso.management",
                "shrinklasso.management.commands"],
      classifiers=[
          'Framework :: Django',
          'Environment :: Console',
          'Programming Language :: Python',
          'Programming Language :: Python :: 3',
          'Intended Audience :: Science/Research',
          'Operating System :: OS Independent',
          'License :: OSI Approved :: BSD License',
          'Topic :: Scientific/Engineering :: Mathematics',
      ],
      python_requires='>=3.8',
      install_requires=['django>=3.2', 'numpy>=1.20', 'scipy>=1.7',
                        'pandas>=1.3'],
      entry_points={
          'console_scripts': ['shrinklasso = shrinklasso.cli:main'],
      },
      cmdclass={'test': Test})
