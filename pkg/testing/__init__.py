import logging

logging.basicConfig(level=logging.WARN)
