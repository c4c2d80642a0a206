# @file __init__.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Test-time aggregation of reasoning traces by Joint Consistency.

Joint Consistency picks one answer group out of a pool of traces by minimising
a constrained Ising energy that combines independent trace scores (the field
h) with pairwise comparative judgments (the interaction J).
"""

__version__ = "0.1"
