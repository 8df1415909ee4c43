"""
Implementation details of the migration engine that are not part of the supported API.
"""
