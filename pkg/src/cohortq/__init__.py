"""cohortq: eligibility criteria to cohort queries.

Parses clinical-trial eligibility criteria expressed as logical forms,
resolves the named clinical things against a biomedical knowledge base,
and compiles each criterion line into SQL over whatever schema a semantic
metadata mapping describes.
"""

__version__ = "0.1.0"
