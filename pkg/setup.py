# @file setup.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import logging
import sys

from setuptools import setup
from logging import StreamHandler

_log = logging.getLogger("jointconsistency")
_log.setLevel(logging.DEBUG)
_handler = StreamHandler(sys.stderr)
_handler.setLevel(logging.DEBUG)
_log.addHandler(_handler)

setup(
    name='jointconsistency',
    version='0.1',
    packages=['jointconsistency', 'jointconsistency.test'],
    package_dir={'':'.'},
    package_data={'jointconsistency.test': ['*.json']},
    test_suite='jointconsistency.test',
    python_requires='>=3.6',
    entry_points={
        'console_scripts': ['jointconsistency = jointconsistency.cli:main'],
    },
    install_requires=[
        "httpx",
        "monotonic",
        "numpy"],
    tests_require=[
        "Mock",
        "scipy"]
    )
