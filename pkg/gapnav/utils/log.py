# PEP-8

import logging

logger = logging.getLogger('gapnav')
