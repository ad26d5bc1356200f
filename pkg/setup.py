#!/usr/bin/python
from setuptools import setup, find_packages
import sys

install_requires = ["numpy>=1.17", "scipy>=1.4"]
tests_require = ["mpmath>=1.1"]

exclusions = []
if 'test' not in sys.argv:
    # tests ship only when testing
    exclusions += ["*.tests"]

setup(
    name = "painleve-whitham",
    version = "0.1",
    packages = find_packages(exclude=exclusions),
    install_requires = install_requires,
    tests_require = tests_require,
    extras_require = {"test": tests_require},
    test_suite = "painlevewhitham.tests",
    scripts = ["painleve-whitham"],
)
