"""
veriprop application package.

Deterministic verification of clinical summaries against the electronic
health record they summarize: proposition extraction, alignment, rule-based
consistency checks and evaluation, plus a synthetic corpus generator and a
small low-rank adapter math library.
"""
