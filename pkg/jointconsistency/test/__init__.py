# @file __init__.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

from jointconsistency.logging_config import configure_test_logging

# Quiet unless NOISY is set; see configure_test_logging.
configure_test_logging()
